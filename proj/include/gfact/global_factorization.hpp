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

// Detection of re-appearing features by penalized-likelihood model
// selection over column merges of the observation matrix.
//
// A model is a partition of the original columns into groups (one group per
// 3-D point). Its cost is the masked distance of the re-arranged matrix to
// the rank-r matrices plus alpha times the number of groups.

#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gfact/completion.hpp"
#include "gfact/init.hpp"
#include "gfact/matrix_core.hpp"
#include "gfact/sfm.hpp"

namespace gfact {

// Calibrated on the 60 x 55 random-box benchmark (coordinates in
// [0,120] x [0,160]); see `gfact_cli bench alpha-sweep`.
inline constexpr double kDefaultAlpha = 2.0;

struct MergePlan {
  // groups[k] lists the original column indices merged into column k.
  std::vector<std::vector<Index>> groups;
  double alpha = kDefaultAlpha;

  Index num_columns() const { return static_cast<Index>(groups.size()); }

  static MergePlan identity(Index cols, double alpha) {
    MergePlan p;
    p.alpha = alpha;
    for (Index j = 0; j < cols; ++j) p.groups.push_back({j});
    return p;
  }

  /// Group index of every original column.
  std::vector<Index> column_owner(Index original_cols) const {
    std::vector<Index> owner(static_cast<size_t>(original_cols), -1);
    for (size_t g = 0; g < groups.size(); ++g) {
      for (Index c : groups[g]) owner[static_cast<size_t>(c)] = static_cast<Index>(g);
    }
    return owner;
  }
};

/// One greedy round: the best candidate merge and whether it was accepted.
struct MergeStep {
  int round = 0;
  Index column_i = -1;  // indices in the matrix of that round
  Index column_j = -1;
  std::vector<Index> group_i;  // original columns
  std::vector<Index> group_j;
  double cost_before = 0.0;
  double cost_after = 0.0;
  Index candidates = 0;
  bool accepted = false;
};

struct GlobalConfig {
  double alpha = kDefaultAlpha;
  Algorithm algorithm = Algorithm::kRc;
  // Fits of the shortlisted merged models, warm-started from the current one.
  SolverConfig screening{4, 20, 1e-7, 0.0, false};
  // Fits of the current model and of the accepted merge.
  SolverConfig final_fit{4, 300, 1e-9, 0.0, false};
  // Pairs are ranked by the residual growth of a single least-squares refit
  // of the merged column against the current column space; only this many
  // are then fitted. 0 fits every pair.
  Index shortlist = 6;
  // Bound on how often one round may restart after finding a better fit of
  // the current model.
  int max_refits = 4;
  // The anchor is fitted from block chains with overlaps 2r, 3r, ...; the
  // lowest-error fit is kept.
  int init_starts = 3;
  // Optional pruning: only pairs whose preliminary 3-D points lie within
  // proximity_radius of each other are tested.
  bool proximity_filter = false;
  double proximity_radius = 0.0;
};

struct GlobalResult {
  MaskedMatrix rearranged;
  MergePlan plan;
  double cost = 0.0;
  std::vector<MergeStep> per_step_costs;
  CompletionResult fit;
  std::vector<std::string> warnings;
};

/// All (i, j), i < j, whose observed row sets are disjoint, in lexicographic order.
inline std::vector<std::pair<Index, Index>> candidate_pairs(const MaskedMatrix& obs) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < obs.cols(); ++i) {
    for (Index j = i + 1; j < obs.cols(); ++j) {
      if ((obs.mask().col(i).array() * obs.mask().col(j).array()).sum() == 0.0) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

/// Replaces columns i and j by one column observed wherever either was. The
/// merged column takes the position of min(i, j).
inline MaskedMatrix merge_columns(const MaskedMatrix& obs, Index i, Index j) {
  if (i < 0 || j < 0 || i >= obs.cols() || j >= obs.cols()) {
    throw ParameterError("merge_columns: column index out of range");
  }
  if (i == j) throw ParameterError("merge_columns: cannot merge a column with itself");
  if (i > j) std::swap(i, j);
  for (Index r = 0; r < obs.rows(); ++r) {
    if (obs.observed(r, i) && obs.observed(r, j)) {
      throw MergeConflictError("merge_columns: columns " + std::to_string(i) + " and " +
                               std::to_string(j) + " are both observed in row " +
                               std::to_string(r));
    }
  }
  const Index cols = obs.cols() - 1;
  Matrix values(obs.rows(), cols);
  Matrix mask(obs.rows(), cols);
  for (Index c = 0, out = 0; c < obs.cols(); ++c) {
    if (c == j) continue;
    values.col(out) = obs.values().col(c);
    mask.col(out) = obs.mask().col(c);
    if (c == i) {
      values.col(out) += obs.values().col(j);
      mask.col(out) += obs.mask().col(j);
    }
    ++out;
  }
  return MaskedMatrix(std::move(values), std::move(mask));
}

/// Applies a merge plan to the original observation.
inline MaskedMatrix rearrange(const MaskedMatrix& obs, const MergePlan& plan) {
  Matrix values = Matrix::Zero(obs.rows(), plan.num_columns());
  Matrix mask = Matrix::Zero(obs.rows(), plan.num_columns());
  std::vector<int> used(static_cast<size_t>(obs.cols()), 0);
  for (Index g = 0; g < plan.num_columns(); ++g) {
    for (Index c : plan.groups[static_cast<size_t>(g)]) {
      if (c < 0 || c >= obs.cols()) throw ParameterError("rearrange: column out of range");
      if (used[static_cast<size_t>(c)]++) {
        throw ParameterError("rearrange: column " + std::to_string(c) + " appears twice");
      }
      for (Index r = 0; r < obs.rows(); ++r) {
        if (!obs.observed(r, c)) continue;
        if (mask(r, g) != 0.0) {
          throw MergeConflictError("rearrange: group " + std::to_string(g) +
                                   " has overlapping observations in row " + std::to_string(r));
        }
        values(r, g) = obs.values()(r, c);
        mask(r, g) = 1.0;
      }
    }
  }
  for (Index c = 0; c < obs.cols(); ++c) {
    if (!used[static_cast<size_t>(c)]) {
      throw ParameterError("rearrange: column " + std::to_string(c) + " is not in any group");
    }
  }
  return MaskedMatrix(std::move(values), std::move(mask));
}

/// Seed for a re-arranged model: each group's column overlays the shared
/// initial guess's member columns on their observed rows and averages them
/// elsewhere.
inline Matrix merged_seed(const Matrix& shared_init, const MaskedMatrix& original,
                          const MergePlan& plan) {
  Matrix seed(shared_init.rows(), plan.num_columns());
  for (Index g = 0; g < plan.num_columns(); ++g) {
    const auto& members = plan.groups[static_cast<size_t>(g)];
    Vector avg = Vector::Zero(shared_init.rows());
    for (Index c : members) avg += shared_init.col(c);
    avg /= static_cast<double>(members.size());
    seed.col(g) = avg;
    for (Index c : members) {
      for (Index r = 0; r < original.rows(); ++r) {
        if (original.observed(r, c)) seed(r, g) = shared_init(r, c);
      }
    }
  }
  return seed;
}

struct PlCost {
  double cost = 0.0;
  CompletionResult fit;
};

/// E(W_r) + alpha * P_r, with E the masked error of a rank-r fit seeded from `seed`.
inline PlCost pl_cost(const MaskedMatrix& obs, const SolverConfig& cfg, double alpha,
                      const Matrix& seed, Algorithm algo = Algorithm::kRc) {
  if (!(alpha >= 0.0)) throw ParameterError("pl_cost: alpha must be >= 0");
  PlCost out;
  out.fit = complete(algo, obs, seed, cfg);
  out.cost = out.fit.final_error() + alpha * static_cast<double>(obs.cols());
  return out;
}

namespace detail {

inline std::vector<Index> concat_sorted(std::vector<Index> a, const std::vector<Index>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

inline MergePlan merge_plan_groups(const MergePlan& plan, Index i, Index j) {
  if (i > j) std::swap(i, j);
  MergePlan out;
  out.alpha = plan.alpha;
  for (Index g = 0; g < plan.num_columns(); ++g) {
    if (g == j) continue;
    if (g == i) {
      out.groups.push_back(concat_sorted(plan.groups[static_cast<size_t>(i)],
                                         plan.groups[static_cast<size_t>(j)]));
    } else {
      out.groups.push_back(plan.groups[static_cast<size_t>(g)]);
    }
  }
  return out;
}

// Growth of the squared masked residual when columns i and j are refitted as
// one column against the fixed column space of `fit`.
inline double merge_score(const MaskedMatrix& obs, const LowRankFactor& fit, Index i, Index j) {
  const Matrix& a = fit.col_space;
  std::vector<Index> rows;
  double before = 0.0;
  for (Index c : {i, j}) {
    for (Index k = 0; k < obs.rows(); ++k) {
      if (!obs.observed(k, c)) continue;
      rows.push_back(k);
      const double e = obs.values()(k, c) - a.row(k).dot(fit.row_space.col(c));
      before += e * e;
    }
  }
  Matrix design(static_cast<Index>(rows.size()), a.cols());
  Vector rhs(design.rows());
  for (size_t k = 0; k < rows.size(); ++k) {
    const Index c = obs.observed(rows[k], i) ? i : j;
    design.row(static_cast<Index>(k)) = a.row(rows[k]);
    rhs(static_cast<Index>(k)) = obs.values()(rows[k], c);
  }
  const Vector b = design.colPivHouseholderQr().solve(rhs);
  return (design * b - rhs).squaredNorm() - before;
}

// Preliminary 3-D point per original column, or nullopt if the scene cannot
// be factorized.
inline std::optional<Matrix> preliminary_points(const MaskedMatrix& obs, const Matrix& seed,
                                                const GlobalConfig& cfg,
                                                std::vector<std::string>& warnings) {
  try {
    const CompletionResult fit = complete(cfg.algorithm, obs, seed, cfg.screening);
    return factorize_sfm(fit.completed()).shape;
  } catch (const Error& e) {
    warnings.push_back(std::string("proximity filter disabled: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace detail

struct MultistartFit {
  InitResult init;  // the start that produced `fit`
  CompletionResult fit;
  Index overlap = 0;
};

/// Fits obs from heuristic inits built with chain overlaps 2r, 3r, ...
/// (`starts` of them) and keeps the lowest final error.
inline MultistartFit multistart_fit(const MaskedMatrix& obs, Algorithm algo,
                                    const SolverConfig& cfg, int starts) {
  if (starts < 1) throw ParameterError("multistart_fit: starts must be >= 1");
  std::optional<MultistartFit> best;
  std::optional<SingularSystemError> failure;
  for (int k = 0; k < starts; ++k) {
    const Index overlap = (k + 2) * cfg.rank;
    InitResult init = heuristic_init(obs, cfg.rank, InitOptions{overlap});
    try {
      CompletionResult fit = complete(algo, obs, init.guess, cfg);
      if (!best || fit.final_error() < best->fit.final_error()) {
        best = MultistartFit{std::move(init), std::move(fit), overlap};
      }
    } catch (const SingularSystemError& e) {
      if (!failure) failure = e;
    }
  }
  if (!best) throw *failure;
  return std::move(*best);
}

/// Greedy penalized-likelihood search over column merges.
///
/// Each round ranks the candidate pairs of the current model, fits the
/// shortlisted merged models, accepts the one with the largest strict cost
/// decrease (ties broken by pair order) and repeats until no merge lowers
/// the cost. The initial guess is computed once on the original matrix and
/// reused by every model.
inline GlobalResult global_rearrange(const MaskedMatrix& obs, const GlobalConfig& cfg) {
  if (!(cfg.alpha >= 0.0)) throw ParameterError("global_rearrange: alpha must be >= 0");
  if (cfg.shortlist < 0 || cfg.max_refits < 0 || cfg.init_starts < 1) {
    throw ParameterError(
        "global_rearrange: shortlist and max_refits must be >= 0, init_starts >= 1");
  }
  cfg.screening.validate();
  cfg.final_fit.validate();
  GlobalResult res;
  MultistartFit start = multistart_fit(obs, cfg.algorithm, cfg.final_fit, cfg.init_starts);
  if (start.init.fallback) res.warnings.push_back("heuristic init fell back: " + start.init.note);
  const InitResult& init = start.init;

  std::optional<Matrix> points;
  if (cfg.proximity_filter) points = detail::preliminary_points(obs, init.guess, cfg, res.warnings);

  MergePlan plan = MergePlan::identity(obs.cols(), cfg.alpha);
  MaskedMatrix current = obs;
  CompletionResult anchor = std::move(start.fit);
  const auto cost_of = [&](const CompletionResult& fit, Index cols) {
    return fit.final_error() + cfg.alpha * static_cast<double>(cols);
  };

  const auto close_enough = [&](Index gi, Index gj) {
    if (!points) return true;
    for (Index a : plan.groups[static_cast<size_t>(gi)]) {
      for (Index b : plan.groups[static_cast<size_t>(gj)]) {
        if ((points->row(a) - points->row(b)).norm() <= cfg.proximity_radius) return true;
      }
    }
    return false;
  };

  for (int round = 1;; ++round) {
    MergeStep step;
    step.round = round;
    std::optional<CompletionResult> accepted_fit;
    for (int refit = 0;; ++refit) {
      const Matrix completed = anchor.completed();
      const Index cols = current.cols();
      step.cost_before = cost_of(anchor, cols);

      std::vector<std::pair<double, std::pair<Index, Index>>> ranked;
      for (const auto& [i, j] : candidate_pairs(current)) {
        if (!close_enough(i, j)) continue;
        ranked.push_back({detail::merge_score(current, anchor.estimate, i, j), {i, j}});
      }
      step.candidates = static_cast<Index>(ranked.size());
      std::sort(ranked.begin(), ranked.end());
      if (cfg.shortlist > 0 && static_cast<Index>(ranked.size()) > cfg.shortlist) {
        ranked.resize(static_cast<size_t>(cfg.shortlist));
      }

      double best_error = std::numeric_limits<double>::infinity();
      Index bi = -1, bj = -1;
      CompletionResult best_fit;
      for (const auto& [score, pair] : ranked) {
        const auto [i, j] = pair;
        const MergePlan trial = detail::merge_plan_groups(MergePlan::identity(cols, cfg.alpha), i, j);
        try {
          CompletionResult fit = complete(cfg.algorithm, merge_columns(current, i, j),
                                          merged_seed(completed, current, trial), cfg.screening);
          if (fit.final_error() < best_error) {
            best_error = fit.final_error();
            bi = i;
            bj = j;
            best_fit = std::move(fit);
          }
        } catch (const SingularSystemError&) {
          // such a model cannot be fitted; never preferred
        }
      }
      if (bi < 0) break;
      step.column_i = bi;
      step.column_j = bj;

      // Refine the winner, then relax the current model from it with the two
      // columns split again. A lower error there means the current fit sat in
      // a worse local minimum, and the round starts over from the better one.
      const MaskedMatrix merged = merge_columns(current, bi, bj);
      CompletionResult refined;
      try {
        refined = complete(cfg.algorithm, merged, best_fit.completed(), cfg.final_fit);
      } catch (const SingularSystemError&) {
        refined = std::move(best_fit);
      }
      Matrix split = completed;
      const Matrix merged_completed = refined.completed();
      for (Index c = 0, m = 0; c < cols; ++c) {
        if (c == bj) {
          split.col(c) = merged_completed.col(bi);
          continue;
        }
        split.col(c) = merged_completed.col(m++);
      }
      std::optional<CompletionResult> relaxed;
      try {
        relaxed = complete(cfg.algorithm, current, split, cfg.final_fit);
      } catch (const SingularSystemError&) {
      }
      if (relaxed && relaxed->final_error() < anchor.final_error() * (1.0 - 1e-4)) {
        anchor = std::move(*relaxed);
        if (refit < cfg.max_refits) continue;
      }
      step.cost_before = cost_of(anchor, cols);
      step.cost_after = cost_of(refined, cols - 1);
      step.accepted = step.cost_after < step.cost_before;
      if (step.accepted) accepted_fit = std::move(refined);
      break;
    }
    if (step.column_i < 0) break;
    step.group_i = plan.groups[static_cast<size_t>(step.column_i)];
    step.group_j = plan.groups[static_cast<size_t>(step.column_j)];
    res.per_step_costs.push_back(step);
    if (!step.accepted) break;
    current = merge_columns(current, step.column_i, step.column_j);
    plan = detail::merge_plan_groups(plan, step.column_i, step.column_j);
    anchor = std::move(*accepted_fit);
  }

  res.cost = cost_of(anchor, current.cols());
  res.fit = std::move(anchor);
  res.rearranged = std::move(current);
  res.plan = std::move(plan);
  return res;
}

}  // namespace gfact
