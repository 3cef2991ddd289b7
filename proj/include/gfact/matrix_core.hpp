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

// Masked observation matrices, masked Frobenius error and exact rank
// truncation of complete matrices.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfact/errors.hpp"

namespace gfact {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* context) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(context) + ": shape " +
                         shape_str(a.rows(), a.cols()) + " does not match " +
                         shape_str(b.rows(), b.cols()));
  }
}

}  // namespace detail

/// A real matrix paired with a same-shape binary mask (1 = observed).
///
/// Entries whose mask is 0 carry no information. They are stored as 0 and no
/// operation in the library reads them.
class MaskedMatrix {
 public:
  MaskedMatrix() = default;

  MaskedMatrix(Matrix values, Matrix mask)
      : values_(std::move(values)), mask_(std::move(mask)) {
    detail::require_same_shape(values_, mask_, "MaskedMatrix");
    for (Index j = 0; j < mask_.cols(); ++j) {
      for (Index i = 0; i < mask_.rows(); ++i) {
        const double m = mask_(i, j);
        if (m != 0.0 && m != 1.0) {
          throw ParameterError("MaskedMatrix: mask entries must be 0 or 1");
        }
        if (m == 0.0) {
          values_(i, j) = 0.0;
        } else if (!std::isfinite(values_(i, j))) {
          throw ParameterError("MaskedMatrix: observed entry is not finite");
        }
      }
    }
  }

  /// Every entry observed.
  static MaskedMatrix full(Matrix values) {
    Matrix mask = Matrix::Ones(values.rows(), values.cols());
    return MaskedMatrix(std::move(values), std::move(mask));
  }

  /// NaN entries become missing.
  static MaskedMatrix from_nan(const Matrix& raw) {
    Matrix mask(raw.rows(), raw.cols());
    Matrix values(raw.rows(), raw.cols());
    for (Index j = 0; j < raw.cols(); ++j) {
      for (Index i = 0; i < raw.rows(); ++i) {
        const bool known = !std::isnan(raw(i, j));
        mask(i, j) = known ? 1.0 : 0.0;
        values(i, j) = known ? raw(i, j) : 0.0;
      }
    }
    return MaskedMatrix(std::move(values), std::move(mask));
  }

  const Matrix& values() const { return values_; }
  const Matrix& mask() const { return mask_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  bool observed(Index i, Index j) const { return mask_(i, j) != 0.0; }

  Index observed_count() const {
    return static_cast<Index>(mask_.sum());
  }

  double known_fraction() const {
    const double n = static_cast<double>(values_.size());
    return n == 0.0 ? 0.0 : static_cast<double>(observed_count()) / n;
  }

  std::vector<Index> observed_rows(Index col) const {
    std::vector<Index> out;
    for (Index i = 0; i < rows(); ++i) {
      if (observed(i, col)) out.push_back(i);
    }
    return out;
  }

  std::vector<Index> observed_cols(Index row) const {
    std::vector<Index> out;
    for (Index j = 0; j < cols(); ++j) {
      if (observed(row, j)) out.push_back(j);
    }
    return out;
  }

  /// Values with NaN at missing positions (the CSV interchange form).
  Matrix with_nan() const {
    Matrix out = values_;
    for (Index j = 0; j < cols(); ++j) {
      for (Index i = 0; i < rows(); ++i) {
        if (!observed(i, j)) out(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
    return out;
  }

  MaskedMatrix transposed() const {
    return MaskedMatrix(values_.transpose(), mask_.transpose());
  }

  /// Observed entries from this matrix, missing ones from `guess`.
  Matrix filled(const Matrix& guess) const {
    detail::require_same_shape(values_, guess, "MaskedMatrix::filled");
    Matrix out(rows(), cols());
    for (Index j = 0; j < cols(); ++j) {
      for (Index i = 0; i < rows(); ++i) {
        out(i, j) = observed(i, j) ? values_(i, j) : guess(i, j);
      }
    }
    return out;
  }

 private:
  Matrix values_;
  Matrix mask_;
};

/// Column-space / row-space pair whose product is a rank-r matrix.
struct LowRankFactor {
  Matrix col_space;  // rows x r
  Matrix row_space;  // r x cols

  Index rank() const { return col_space.cols(); }
  Matrix product() const { return col_space * row_space; }
};

/// ||(obs - candidate) .* mask||_F. Entries of `candidate` at missing
/// positions are never read, so they may hold anything (including NaN).
inline double masked_frobenius(const MaskedMatrix& obs, const Matrix& candidate) {
  detail::require_same_shape(obs.values(), candidate, "masked_frobenius");
  double sum = 0.0;
  for (Index j = 0; j < obs.cols(); ++j) {
    for (Index i = 0; i < obs.rows(); ++i) {
      if (obs.observed(i, j)) {
        const double d = obs.values()(i, j) - candidate(i, j);
        sum += d * d;
      }
    }
  }
  return std::sqrt(sum);
}

inline double masked_frobenius(const MaskedMatrix& obs, const LowRankFactor& f) {
  if (f.col_space.rows() != obs.rows() || f.row_space.cols() != obs.cols()) {
    throw DimensionError("masked_frobenius: factor product shape " +
                         detail::shape_str(f.col_space.rows(), f.row_space.cols()) +
                         " does not match " + detail::shape_str(obs.rows(), obs.cols()));
  }
  double sum = 0.0;
  for (Index j = 0; j < obs.cols(); ++j) {
    for (Index i = 0; i < obs.rows(); ++i) {
      if (obs.observed(i, j)) {
        const double d = obs.values()(i, j) - f.col_space.row(i).dot(f.row_space.col(j));
        sum += d * d;
      }
    }
  }
  return std::sqrt(sum);
}

namespace detail {

inline void require_rank(Index r, Index rows, Index cols, const char* context) {
  if (r < 1 || r > std::min(rows, cols)) {
    std::ostringstream os;
    os << context << ": rank " << r << " outside [1, " << std::min(rows, cols)
       << "]";
    throw ParameterError(os.str());
  }
}

}  // namespace detail

/// Singular values in non-increasing order.
inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

/// Best rank-r factorization of a complete matrix: U_r * Sigma_r and V_r^T.
inline LowRankFactor truncated_factor(const Matrix& m, Index r) {
  detail::require_rank(r, m.rows(), m.cols(), "truncated_factor");
  LowRankFactor f;
  if (std::min(m.rows(), m.cols()) > 64) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.col_space = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    f.row_space = svd.matrixV().leftCols(r).transpose();
  } else {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.col_space = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    f.row_space = svd.matrixV().leftCols(r).transpose();
  }
  return f;
}

/// Projection onto the set of matrices of rank <= r (truncated SVD).
inline Matrix rank_project(const Matrix& m, Index r) {
  return truncated_factor(m, r).product();
}

/// Singular values of col_space * row_space computed from the r x r core,
/// without forming the full product.
inline Vector factor_singular_values(const LowRankFactor& f) {
  Eigen::HouseholderQR<Matrix> qa(f.col_space);
  Eigen::HouseholderQR<Matrix> qb(f.row_space.transpose());
  const Index r = f.rank();
  const Index ra = std::min<Index>(r, f.col_space.rows());
  const Index rb = std::min<Index>(r, f.row_space.cols());
  Matrix core = qa.matrixQR().topRows(ra).template triangularView<Eigen::Upper>() *
                Matrix(qb.matrixQR().topRows(rb).template triangularView<Eigen::Upper>())
                    .transpose();
  return singular_values(core);
}

/// Largest principal angle (radians) between the column spans of a and b.
inline double subspace_angle(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(Matrix::Zero(a.rows(), 1), Matrix::Zero(b.rows(), 1),
                             "subspace_angle");
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() *
                    Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() *
                    Matrix::Identity(b.rows(), b.cols());
  // sin of the largest angle = ||(I - Qb Qb^T) Qa||_2, stable for tiny angles.
  const Matrix resid = qa - qb * (qb.transpose() * qa);
  const Vector s = singular_values(resid);
  const double sin_max = s.size() == 0 ? 0.0 : std::min(1.0, s(0));
  return std::asin(sin_max);
}

}  // namespace gfact
