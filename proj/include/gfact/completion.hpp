// Copyright 2026 The gfact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Rank-r fitting of partially observed matrices: the Expectation-Maximization
// (EM) iteration and the Row-Column (RC) alternating least-squares iteration.

#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "gfact/matrix_core.hpp"

namespace gfact {

struct SolverConfig {
  Index rank = 4;
  int max_iter = 100;
  // Stop once the masked error decreases by less than tol * (previous error).
  double tol = 1e-9;
  // Added to the diagonal of every per-column / per-row normal system.
  double ridge = 0.0;
  // With ridge == 0, a column or row with fewer than `rank` observations is an
  // error unless this is set, in which case its minimum-norm solution is used.
  bool min_norm_underdetermined = false;

  void validate() const {
    if (rank < 1) throw ParameterError("SolverConfig: rank must be >= 1");
    if (max_iter < 1) throw ParameterError("SolverConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw ParameterError("SolverConfig: tol must be > 0");
    if (!(ridge >= 0.0)) throw ParameterError("SolverConfig: ridge must be >= 0");
  }
};

enum class Algorithm { kEm, kRc };

struct CompletionResult {
  LowRankFactor estimate;
  // error_trace[k] and sigma1_trace[k] describe the estimate after iteration
  // k + 1; the initial guess is described by the initial_* fields.
  std::vector<double> error_trace;
  std::vector<double> sigma1_trace;
  double initial_error = 0.0;
  double initial_sigma1 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  Matrix completed() const { return estimate.product(); }
  double final_error() const {
    return error_trace.empty() ? initial_error : error_trace.back();
  }
};

namespace detail {

// Observed row indices per column and observed column indices per row.
struct MaskIndex {
  std::vector<std::vector<Index>> rows_of_col;
  std::vector<std::vector<Index>> cols_of_row;

  explicit MaskIndex(const MaskedMatrix& obs)
      : rows_of_col(static_cast<size_t>(obs.cols())),
        cols_of_row(static_cast<size_t>(obs.rows())) {
    for (Index j = 0; j < obs.cols(); ++j) {
      for (Index i = 0; i < obs.rows(); ++i) {
        if (obs.observed(i, j)) {
          rows_of_col[static_cast<size_t>(j)].push_back(i);
          cols_of_row[static_cast<size_t>(i)].push_back(j);
        }
      }
    }
  }
};

// min || design * x - rhs || for one column (or row). design is n x r.
inline Vector solve_masked_ls(const Matrix& design, const Vector& rhs, double ridge,
                              bool min_norm, SingularSystemError::Axis axis,
                              Index which, std::vector<std::string>* warnings) {
  const Index r = design.cols();
  const Index n = design.rows();
  const char* noun = axis == SingularSystemError::Axis::kColumn ? "column" : "row";
  if (ridge > 0.0) {
    Matrix normal = design.transpose() * design;
    normal.diagonal().array() += ridge;
    return normal.ldlt().solve(design.transpose() * rhs);
  }
  if (n < r) {
    if (!min_norm) {
      std::ostringstream os;
      os << noun << " " << which << " has " << n << " observed entries, fewer than rank "
         << r;
      throw SingularSystemError(axis, which, os.str());
    }
    if (warnings != nullptr) {
      std::ostringstream os;
      os << noun << " " << which << " under-determined (" << n << " < " << r
         << " observations); minimum-norm solution used";
      warnings->push_back(os.str());
    }
    if (n == 0) return Vector::Zero(r);
    return Eigen::CompleteOrthogonalDecomposition<Matrix>(design).solve(rhs);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < r) {
    if (min_norm) {
      if (warnings != nullptr) {
        std::ostringstream os;
        os << noun << " " << which << " system is rank deficient; minimum-norm solution used";
        warnings->push_back(os.str());
      }
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
      cod.setThreshold(1e-10);
      return cod.solve(rhs);
    }
    std::ostringstream os;
    os << noun << " " << which << " least-squares system is singular";
    throw SingularSystemError(axis, which, os.str());
  }
  return qr.solve(rhs);
}

inline Matrix row_step_impl(const MaskedMatrix& obs, const MaskIndex& index,
                            const Matrix& col_space, double ridge, bool min_norm,
                            std::vector<std::string>* warnings) {
  const Index r = col_space.cols();
  Matrix row_space(r, obs.cols());
  for (Index p = 0; p < obs.cols(); ++p) {
    const auto& rows = index.rows_of_col[static_cast<size_t>(p)];
    const Index n = static_cast<Index>(rows.size());
    Matrix design(n, r);
    Vector rhs(n);
    for (Index k = 0; k < n; ++k) {
      design.row(k) = col_space.row(rows[static_cast<size_t>(k)]);
      rhs(k) = obs.values()(rows[static_cast<size_t>(k)], p);
    }
    row_space.col(p) = solve_masked_ls(design, rhs, ridge, min_norm,
                                       SingularSystemError::Axis::kColumn, p, warnings);
  }
  return row_space;
}

inline Matrix col_step_impl(const MaskedMatrix& obs, const MaskIndex& index,
                            const Matrix& row_space, double ridge, bool min_norm,
                            std::vector<std::string>* warnings) {
  const Index r = row_space.rows();
  Matrix col_space(obs.rows(), r);
  for (Index f = 0; f < obs.rows(); ++f) {
    const auto& cols = index.cols_of_row[static_cast<size_t>(f)];
    const Index n = static_cast<Index>(cols.size());
    Matrix design(n, r);
    Vector rhs(n);
    for (Index k = 0; k < n; ++k) {
      design.row(k) = row_space.col(cols[static_cast<size_t>(k)]).transpose();
      rhs(k) = obs.values()(f, cols[static_cast<size_t>(k)]);
    }
    col_space.row(f) = solve_masked_ls(design, rhs, ridge, min_norm,
                                       SingularSystemError::Axis::kRow, f, warnings)
                           .transpose();
  }
  return col_space;
}

inline bool has_converged(const std::vector<double>& trace, double tol, double scale) {
  const size_t k = trace.size();
  if (k == 0) return false;
  if (trace.back() <= 1e-14 * scale) return true;
  if (k < 2) return false;
  const double prev = trace[k - 2];
  const double cur = trace[k - 1];
  return prev - cur <= tol * prev;
}

inline void check_init(const MaskedMatrix& obs, const Matrix& init, const SolverConfig& cfg,
                       const char* context) {
  cfg.validate();
  require_same_shape(obs.values(), init, context);
  require_rank(cfg.rank, obs.rows(), obs.cols(), context);
  if (!init.allFinite()) throw ParameterError(std::string(context) + ": init is not finite");
}

}  // namespace detail

/// R-step: for fixed column space A, each column b_p of the row space solves
/// min ||(w_p - A b_p) .* m_p|| using only that column's observed rows.
inline Matrix rc_row_step(const MaskedMatrix& obs, const Matrix& col_space, double ridge,
                          bool min_norm_underdetermined = false,
                          std::vector<std::string>* warnings = nullptr) {
  if (col_space.rows() != obs.rows()) {
    throw DimensionError("rc_row_step: col_space has " + std::to_string(col_space.rows()) +
                         " rows, observation has " + std::to_string(obs.rows()));
  }
  if (!col_space.allFinite()) throw ParameterError("rc_row_step: col_space is not finite");
  return detail::row_step_impl(obs, detail::MaskIndex(obs), col_space, ridge,
                               min_norm_underdetermined, warnings);
}

/// C-step: for fixed row space B, each row a_f of the column space solves
/// min ||(w_f - a_f B) .* m_f|| using only that row's observed columns.
inline Matrix rc_col_step(const MaskedMatrix& obs, const Matrix& row_space, double ridge,
                          bool min_norm_underdetermined = false,
                          std::vector<std::string>* warnings = nullptr) {
  if (row_space.cols() != obs.cols()) {
    throw DimensionError("rc_col_step: row_space has " + std::to_string(row_space.cols()) +
                         " columns, observation has " + std::to_string(obs.cols()));
  }
  if (!row_space.allFinite()) throw ParameterError("rc_col_step: row_space is not finite");
  return detail::col_step_impl(obs, detail::MaskIndex(obs), row_space, ridge,
                               min_norm_underdetermined, warnings);
}

/// EM: alternately fill the missing entries from the previous estimate and
/// project the filled matrix onto rank r.
inline CompletionResult em_complete(const MaskedMatrix& obs, const Matrix& init,
                                    const SolverConfig& cfg) {
  detail::check_init(obs, init, cfg, "em_complete");
  const double scale = std::max(obs.values().norm(), std::numeric_limits<double>::min());

  CompletionResult res;
  res.initial_error = masked_frobenius(obs, init);
  res.initial_sigma1 = singular_values(init)(0);

  Matrix estimate = init;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    res.estimate = truncated_factor(obs.filled(estimate), cfg.rank);
    estimate = res.estimate.product();
    res.error_trace.push_back(masked_frobenius(obs, estimate));
    // U has orthonormal columns, so the first column norm of U*Sigma is sigma_1.
    res.sigma1_trace.push_back(res.estimate.col_space.col(0).norm());
    res.iterations = k;
    if (detail::has_converged(res.error_trace, cfg.tol, scale)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// RC iteration started from an explicit column-space matrix.
inline CompletionResult rc_complete_from(const MaskedMatrix& obs, const Matrix& col_space0,
                                         const SolverConfig& cfg) {
  cfg.validate();
  if (col_space0.rows() != obs.rows() || col_space0.cols() != cfg.rank) {
    throw DimensionError("rc_complete: initial column space must be " +
                         detail::shape_str(obs.rows(), cfg.rank));
  }
  detail::require_rank(cfg.rank, obs.rows(), obs.cols(), "rc_complete");
  const double scale = std::max(obs.values().norm(), std::numeric_limits<double>::min());
  const detail::MaskIndex index(obs);

  CompletionResult res;
  Matrix a = col_space0;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Matrix b = detail::row_step_impl(obs, index, a, cfg.ridge,
                                           cfg.min_norm_underdetermined, &res.warnings);
    a = detail::col_step_impl(obs, index, b, cfg.ridge, cfg.min_norm_underdetermined,
                              &res.warnings);
    res.estimate = LowRankFactor{a, b};
    res.error_trace.push_back(masked_frobenius(obs, res.estimate));
    res.sigma1_trace.push_back(factor_singular_values(res.estimate)(0));
    res.iterations = k;
    if (detail::has_converged(res.error_trace, cfg.tol, scale)) {
      res.converged = true;
      break;
    }
  }
  // Under-determined lines repeat their warning every iteration.
  std::vector<std::string> unique;
  for (auto& w : res.warnings) {
    if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(std::move(w));
  }
  res.warnings = std::move(unique);
  return res;
}

/// RC: alternate R-steps and C-steps starting from A0 = U_r Sigma_r of init.
inline CompletionResult rc_complete(const MaskedMatrix& obs, const Matrix& init,
                                    const SolverConfig& cfg) {
  detail::check_init(obs, init, cfg, "rc_complete");
  const LowRankFactor f0 = truncated_factor(init, cfg.rank);
  CompletionResult res = rc_complete_from(obs, f0.col_space, cfg);
  res.initial_error = masked_frobenius(obs, init);
  res.initial_sigma1 = f0.col_space.col(0).norm();
  return res;
}

inline CompletionResult complete(Algorithm algo, const MaskedMatrix& obs, const Matrix& init,
                                 const SolverConfig& cfg) {
  return algo == Algorithm::kEm ? em_complete(obs, init, cfg) : rc_complete(obs, init, cfg);
}

}  // namespace gfact
