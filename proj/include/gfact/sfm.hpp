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

// Rigid structure and motion from a completed rank-4 observation matrix under
// orthographic projection, plus similarity-aligned error metrics.
//
// Row convention: frame f occupies rows 2f (x) and 2f + 1 (y).

#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gfact/matrix_core.hpp"

namespace gfact {

struct RigidModel {
  Matrix rotations;     // 2F x 3, rows 2f and 2f+1 are frame f's camera axes
  Vector translations;  // 2F
  Matrix shape;         // P x 3

  Index num_frames() const { return rotations.rows() / 2; }
  Index num_points() const { return shape.rows(); }

  /// R * S^T + t * 1^T
  Matrix reproject() const {
    Matrix w = rotations * shape.transpose();
    w.colwise() += translations;
    return w;
  }

  /// The depth-reversed twin: mirror the shape and the camera axes through
  /// the first frame's image plane. Both explain orthographic data equally.
  RigidModel mirrored() const {
    RigidModel m = *this;
    m.rotations.col(2) *= -1.0;
    m.shape.col(2) *= -1.0;
    return m;
  }
};

namespace detail {

// Coefficients g with a^T L b = g . l for symmetric L packed as
// l = (L00, L01, L02, L11, L12, L22).
inline Eigen::Matrix<double, 1, 6> metric_row(const Eigen::RowVector3d& a,
                                              const Eigen::RowVector3d& b) {
  Eigen::Matrix<double, 1, 6> g;
  g << a(0) * b(0), a(0) * b(1) + a(1) * b(0), a(0) * b(2) + a(2) * b(0), a(1) * b(1),
      a(1) * b(2) + a(2) * b(1), a(2) * b(2);
  return g;
}

// Closest rotation (det +1) to m in the Frobenius sense.
inline Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace detail

/// Factorizes a completed 2F x P matrix into rigid motion and shape.
///
/// t is the row mean, the centered matrix is truncated to rank 3 and split
/// symmetrically, and the affine ambiguity Q is found from the per-frame
/// orthonormality constraints on the camera rows (linear least squares for
/// Q Q^T, then Cholesky). The gauge puts the first frame's camera at the
/// identity.
inline RigidModel factorize_sfm(const Matrix& completed) {
  if (completed.rows() % 2 != 0) {
    throw DimensionError("factorize_sfm: row count must be even (x and y rows per frame)");
  }
  const Index frames = completed.rows() / 2;
  if (frames < 2) throw ParameterError("factorize_sfm: at least two frames are required");
  if (completed.cols() < 4) throw ParameterError("factorize_sfm: at least four points are required");
  if (!completed.allFinite()) throw ParameterError("factorize_sfm: input is not finite");

  RigidModel model;
  model.translations = completed.rowwise().mean();
  const Matrix centered = completed.colwise() - model.translations;

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() < 3 || sv(2) <= 1e-9 * sv(0)) {
    throw DegenerateConfigurationError(
        "factorize_sfm: centered measurements have rank < 3 (planar scene or rotation "
        "about the optical axis only)");
  }
  const Eigen::Vector3d root = sv.head<3>().cwiseSqrt();
  const Matrix r_affine = svd.matrixU().leftCols(3) * root.asDiagonal();
  const Matrix s_affine = svd.matrixV().leftCols(3) * root.asDiagonal();

  Matrix system(3 * frames, 6);
  Vector rhs(3 * frames);
  for (Index f = 0; f < frames; ++f) {
    const Eigen::RowVector3d i = r_affine.row(2 * f);
    const Eigen::RowVector3d j = r_affine.row(2 * f + 1);
    system.row(3 * f) = detail::metric_row(i, i);
    system.row(3 * f + 1) = detail::metric_row(j, j);
    system.row(3 * f + 2) = detail::metric_row(i, j);
    rhs(3 * f) = 1.0;
    rhs(3 * f + 1) = 1.0;
    rhs(3 * f + 2) = 0.0;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(system);
  qr.setThreshold(1e-12);
  if (qr.rank() < 6) {
    throw DegenerateConfigurationError("factorize_sfm: metric constraints are rank deficient");
  }
  const Vector l = qr.solve(rhs);
  Eigen::Matrix3d gram;
  gram << l(0), l(1), l(2), l(1), l(3), l(4), l(2), l(4), l(5);
  Eigen::LLT<Eigen::Matrix3d> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw DegenerateConfigurationError(
        "factorize_sfm: metric matrix Q Q^T is not positive definite");
  }
  const Eigen::Matrix3d q = llt.matrixL();

  Matrix rot = r_affine * q;
  Matrix shape = s_affine * q.inverse().transpose();

  Eigen::Matrix3d first;
  first.row(0) = rot.row(0);
  first.row(1) = rot.row(1);
  first.row(2) = first.row(0).cross(first.row(1));
  const Eigen::Matrix3d gauge = detail::nearest_rotation(first);
  model.rotations = rot * gauge.transpose();
  model.shape = shape * gauge.transpose();
  return model;
}

/// Similarity (rotation, scale, translation) taking `estimated` onto `truth`.
struct Similarity {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Matrix apply(const Matrix& points) const {
    Matrix out = (scale * points * rotation.transpose()).rowwise() + translation.transpose();
    return out;
  }
};

inline Similarity align_similarity(const Matrix& estimated, const Matrix& truth) {
  if (estimated.cols() != 3 || truth.cols() != 3 || estimated.rows() != truth.rows()) {
    throw DimensionError("align_similarity: expected two P x 3 point sets of equal size");
  }
  if (estimated.rows() < 3) throw ParameterError("align_similarity: at least three points required");
  const Eigen::Matrix4d t = Eigen::umeyama(estimated.transpose(), truth.transpose(), true);
  Similarity s;
  const Eigen::Matrix3d sr = t.topLeftCorner<3, 3>();
  s.scale = std::cbrt(sr.determinant());
  s.rotation = sr / s.scale;
  s.translation = t.topRightCorner<3, 1>();
  return s;
}

/// Per-point distances after optimal similarity alignment.
inline Vector aligned_residuals(const Matrix& estimated, const Matrix& truth) {
  const Similarity s = align_similarity(estimated, truth);
  return (s.apply(estimated) - truth).rowwise().norm();
}

/// Shape RMSE after optimal similarity alignment of `estimated` onto `truth`.
inline double shape_error(const Matrix& estimated, const Matrix& truth) {
  const Vector res = aligned_residuals(estimated, truth);
  return std::sqrt(res.squaredNorm() / static_cast<double>(res.size()));
}

/// RMS over frames of ||R_est,f G^T - R_true,f||_F, where G is the rotation
/// of the shape alignment (the shared gauge).
inline double motion_error(const RigidModel& estimated, const RigidModel& truth) {
  if (estimated.rotations.rows() != truth.rotations.rows()) {
    throw DimensionError("motion_error: frame counts differ");
  }
  if (estimated.rotations.rows() == 0) throw ParameterError("motion_error: no frames");
  const Similarity s = align_similarity(estimated.shape, truth.shape);
  const Matrix aligned = estimated.rotations * s.rotation.transpose();
  double sum = 0.0;
  const Index frames = estimated.num_frames();
  for (Index f = 0; f < frames; ++f) {
    sum += (aligned.middleRows(2 * f, 2) - truth.rotations.middleRows(2 * f, 2)).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(frames));
}

struct ErrorReport {
  double shape_rmse = 0.0;
  double motion_rmse = 0.0;
  Vector per_point;
  // True when the depth-reversed twin of the estimate matched the truth better.
  bool mirrored = false;
};

/// Shape and motion errors of `estimated` against `truth` (matching point
/// order). The orthographic depth reversal is unobservable, so the better of
/// the estimate and its mirror image is reported.
inline ErrorReport error_report(const RigidModel& estimated, const RigidModel& truth) {
  ErrorReport best;
  for (int flip = 0; flip < 2; ++flip) {
    const RigidModel m = flip ? estimated.mirrored() : estimated;
    ErrorReport r;
    r.per_point = aligned_residuals(m.shape, truth.shape);
    r.shape_rmse = std::sqrt(r.per_point.squaredNorm() / static_cast<double>(r.per_point.size()));
    r.motion_rmse = motion_error(m, truth);
    r.mirrored = flip == 1;
    if (flip == 0 || r.shape_rmse < best.shape_rmse) best = r;
  }
  return best;
}

/// ASCII PLY point cloud of the model's shape.
inline void write_ply(const std::string& path, const Matrix& shape) {
  std::ofstream out(path);
  if (!out) throw Error("write_ply: cannot open " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << shape.rows()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  out.precision(17);
  for (Index i = 0; i < shape.rows(); ++i) {
    out << shape(i, 0) << ' ' << shape(i, 1) << ' ' << shape(i, 2) << '\n';
  }
}

}  // namespace gfact
