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

// Synthetic ground truth: rigid scenes observed under orthographic projection
// with occlusion, observation masks, random low-rank matrices, and the
// one-parameter error curve of the 2 x 2 rank-1 problem.

#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "gfact/global_factorization.hpp"
#include "gfact/matrix_core.hpp"
#include "gfact/sfm.hpp"

namespace gfact {

enum class ShapeKind { kCylinder, kRandomBox };

struct SceneSpec {
  ShapeKind shape = ShapeKind::kRandomBox;
  Index num_points = 40;
  Index num_frames = 30;

  // Camera motion: rotation by sweep_deg about `axis` spread evenly over the
  // frames, after a fixed tilt about the camera x axis.
  double sweep_deg = 90.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double tilt_deg = 15.0;

  double noise_std = 0.0;
  // Image-plane translation: the object center traces a Lissajous path of
  // this amplitude (pixels) around the window center. 0 keeps it fixed.
  double drift = 0.0;
  // Projections are centered in this image window.
  double window_x_min = 0.0, window_x_max = 120.0;
  double window_y_min = 0.0, window_y_max = 160.0;

  // Cylinder: num_points = angles * rings, points on a regular grid.
  Index cylinder_rings = 12;
  double cylinder_radius = 40.0;
  double cylinder_height = 120.0;
  double cylinder_angle_offset_deg = 0.0;
  // A point is visible while its surface normal is within half this angle of
  // the direction towards the camera. 360 disables self-occlusion.
  double visible_arc_deg = 360.0;

  // Random box: every feature is visible on one window of frames whose length
  // is uniform in [min_visible, max_visible]; the first `num_interrupted`
  // features additionally lose a gap of [gap_min, gap_max] frames inside it,
  // leaving at least min_period frames on each side (their windows are
  // lengthened as needed).
  Index min_visible = 30;
  Index max_visible = 30;
  Index num_interrupted = 0;
  Index gap_min = 1;
  Index gap_max = 1;
  Index min_period = 2;
  // Visibility is redrawn until every frame shows at least this many points.
  Index min_per_frame = 0;

  // One column per tracking period (true) or one column per point (false).
  bool split_reappearances = true;
  // Split at most this many points (those whose shortest period is longest);
  // negative splits every re-appearing point.
  Index split_limit = -1;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_points < 4) throw ParameterError("SceneSpec: num_points must be >= 4");
    if (num_frames < 3) throw ParameterError("SceneSpec: num_frames must be >= 3");
    if (!(noise_std >= 0.0)) throw ParameterError("SceneSpec: noise_std must be >= 0");
    if (!(drift >= 0.0)) throw ParameterError("SceneSpec: drift must be >= 0");
    if (axis.norm() == 0.0) throw ParameterError("SceneSpec: rotation axis must be nonzero");
    if (shape == ShapeKind::kCylinder) {
      if (cylinder_rings < 1 || num_points % cylinder_rings != 0) {
        throw ParameterError("SceneSpec: num_points must be a multiple of cylinder_rings");
      }
      if (!(visible_arc_deg > 0.0 && visible_arc_deg <= 360.0)) {
        throw ParameterError("SceneSpec: visible_arc_deg must be in (0, 360]");
      }
    } else {
      if (min_visible < 1 || max_visible < min_visible || max_visible > num_frames) {
        throw ParameterError("SceneSpec: need 1 <= min_visible <= max_visible <= num_frames");
      }
      if (min_per_frame < 0 || min_per_frame > num_points) {
        throw ParameterError("SceneSpec: min_per_frame out of range");
      }
      if (num_interrupted < 0 || num_interrupted > num_points) {
        throw ParameterError("SceneSpec: num_interrupted out of range");
      }
      if (num_interrupted > 0 &&
          (gap_min < 1 || gap_max < gap_min || min_period < 1 ||
           2 * min_period + gap_max > max_visible)) {
        throw ParameterError(
            "SceneSpec: interruption gaps do not fit inside the longest visibility window");
      }
    }
  }
};

struct Scene {
  MaskedMatrix obs;
  RigidModel truth;           // shape has one row per physical point
  MergePlan true_plan;        // groups of obs columns per physical point
  std::vector<Index> column_point;  // physical point of every obs column
  Matrix noiseless;           // R S^T + t 1^T per obs column, without noise
  std::vector<std::string> warnings;

  /// Truth expanded to one point per obs column.
  RigidModel truth_per_column() const {
    RigidModel m = truth;
    m.shape.resize(static_cast<Index>(column_point.size()), 3);
    for (size_t c = 0; c < column_point.size(); ++c) {
      m.shape.row(static_cast<Index>(c)) = truth.shape.row(column_point[c]);
    }
    return m;
  }
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

inline Eigen::Matrix3d frame_rotation(const SceneSpec& spec, Index f) {
  const double frac =
      spec.num_frames > 1 ? static_cast<double>(f) / static_cast<double>(spec.num_frames - 1) : 0.0;
  const Eigen::Matrix3d tilt =
      Eigen::AngleAxisd(deg2rad(spec.tilt_deg), Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d spin =
      Eigen::AngleAxisd(deg2rad(spec.sweep_deg) * frac, spec.axis.normalized()).toRotationMatrix();
  return tilt * spin;
}

}  // namespace detail

/// Builds W = R S^T + t 1^T + noise for the scene, applies its occlusion
/// model and splits multi-period tracks into separate columns.
inline Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index frames = spec.num_frames;
  const Index points = spec.num_points;

  Scene scene;
  scene.truth.shape.resize(points, 3);
  std::vector<Eigen::Vector3d> normals;
  if (spec.shape == ShapeKind::kCylinder) {
    const Index rings = spec.cylinder_rings;
    const Index angles = points / rings;
    for (Index a = 0; a < angles; ++a) {
      const double phi = detail::deg2rad(spec.cylinder_angle_offset_deg) +
                         2.0 * detail::kPi * static_cast<double>(a) / static_cast<double>(angles);
      for (Index l = 0; l < rings; ++l) {
        const double y = rings > 1 ? spec.cylinder_height *
                                         (static_cast<double>(l) / static_cast<double>(rings - 1) - 0.5)
                                   : 0.0;
        const Index p = a * rings + l;
        scene.truth.shape.row(p) << spec.cylinder_radius * std::sin(phi), y,
            spec.cylinder_radius * std::cos(phi);
        normals.emplace_back(std::sin(phi), 0.0, std::cos(phi));
      }
    }
  } else {
    // Box proportional to the window; rescaled below once the motion is known.
    const double hx = 0.5 * (spec.window_x_max - spec.window_x_min) * 0.6;
    const double hy = 0.5 * (spec.window_y_max - spec.window_y_min) * 0.6;
    std::uniform_real_distribution<double> ux(-hx, hx);
    std::uniform_real_distribution<double> uy(-hy, hy);
    for (Index p = 0; p < points; ++p) {
      const double x = ux(rng);
      const double y = uy(rng);
      const double z = ux(rng);
      scene.truth.shape.row(p) << x, y, z;
    }
  }

  scene.truth.rotations.resize(2 * frames, 3);
  scene.truth.translations.resize(2 * frames);
  const double cx = 0.5 * (spec.window_x_min + spec.window_x_max);
  const double cy = 0.5 * (spec.window_y_min + spec.window_y_max);
  std::vector<Eigen::Matrix3d> frame_rot;
  for (Index f = 0; f < frames; ++f) {
    frame_rot.push_back(detail::frame_rotation(spec, f));
    scene.truth.rotations.row(2 * f) = frame_rot.back().row(0);
    scene.truth.rotations.row(2 * f + 1) = frame_rot.back().row(1);
    const double phase = 2.0 * detail::kPi * static_cast<double>(f) / static_cast<double>(frames);
    scene.truth.translations(2 * f) = cx + spec.drift * std::sin(phase);
    scene.truth.translations(2 * f + 1) = cy + spec.drift * std::sin(2.0 * phase);
  }
  if (spec.shape == ShapeKind::kRandomBox) {
    // Largest uniform scale keeping every projection in the window.
    double scale = std::numeric_limits<double>::infinity();
    const Matrix centered = scene.truth.rotations * scene.truth.shape.transpose();
    for (Index i = 0; i < 2 * frames; ++i) {
      const bool is_x = i % 2 == 0;
      const double t = scene.truth.translations(i);
      const double lo = (is_x ? spec.window_x_min : spec.window_y_min) - t;
      const double hi = (is_x ? spec.window_x_max : spec.window_y_max) - t;
      if (lo >= 0.0 || hi <= 0.0) throw ParameterError("SceneSpec: drift moves the center out of the window");
      for (Index p = 0; p < points; ++p) {
        const double v = centered(i, p);
        if (v > 0.0) scale = std::min(scale, hi / v);
        if (v < 0.0) scale = std::min(scale, lo / v);
      }
    }
    scene.truth.shape *= scale;
  }
  const Matrix clean = scene.truth.reproject();
  Matrix noisy = clean;
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (Index p = 0; p < points; ++p) {
      for (Index i = 0; i < 2 * frames; ++i) noisy(i, p) += noise(rng);
    }
  }

  // visible[p][f]
  std::vector<std::vector<bool>> visible(static_cast<size_t>(points),
                                         std::vector<bool>(static_cast<size_t>(frames), false));
  if (spec.shape == ShapeKind::kCylinder) {
    const double cos_half = std::cos(detail::deg2rad(spec.visible_arc_deg) / 2.0);
    for (Index p = 0; p < points; ++p) {
      for (Index f = 0; f < frames; ++f) {
        const Eigen::Vector3d n = frame_rot[static_cast<size_t>(f)] * normals[static_cast<size_t>(p)];
        visible[static_cast<size_t>(p)][static_cast<size_t>(f)] =
            spec.visible_arc_deg >= 360.0 || n.z() >= cos_half - 1e-12;
      }
    }
  } else {
    const auto draw = [&] {
      for (auto& v : visible) std::fill(v.begin(), v.end(), false);
      for (Index p = 0; p < points; ++p) {
        const bool interrupted = p < spec.num_interrupted;
        const Index gap =
            interrupted ? std::uniform_int_distribution<Index>(spec.gap_min, spec.gap_max)(rng) : 0;
        const Index shortest =
            interrupted ? std::max(spec.min_visible, 2 * spec.min_period + gap) : spec.min_visible;
        const Index l = std::uniform_int_distribution<Index>(shortest, spec.max_visible)(rng);
        const Index start = std::uniform_int_distribution<Index>(0, frames - l)(rng);
        for (Index f = start; f < start + l; ++f) {
          visible[static_cast<size_t>(p)][static_cast<size_t>(f)] = true;
        }
        if (interrupted) {
          const Index split = std::uniform_int_distribution<Index>(
              start + spec.min_period, start + l - spec.min_period - gap)(rng);
          for (Index f = split; f < split + gap; ++f) {
            visible[static_cast<size_t>(p)][static_cast<size_t>(f)] = false;
          }
        }
      }
      for (Index f = 0; f < frames; ++f) {
        Index seen = 0;
        for (Index p = 0; p < points; ++p) seen += visible[static_cast<size_t>(p)][static_cast<size_t>(f)];
        if (seen < spec.min_per_frame) return false;
      }
      return true;
    };
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) ok = draw();
    if (!ok) {
      throw ParameterError("SceneSpec: no visibility draw satisfies min_per_frame in 1000 attempts");
    }
  }

  // Tracking periods: maximal runs of visible frames.
  std::vector<std::vector<std::pair<Index, Index>>> periods(static_cast<size_t>(points));
  for (Index p = 0; p < points; ++p) {
    const auto& vis = visible[static_cast<size_t>(p)];
    for (Index f = 0; f < frames;) {
      if (!vis[static_cast<size_t>(f)]) {
        ++f;
        continue;
      }
      Index e = f;
      while (e < frames && vis[static_cast<size_t>(e)]) ++e;
      periods[static_cast<size_t>(p)].emplace_back(f, e);
      f = e;
    }
    if (periods[static_cast<size_t>(p)].empty()) {
      scene.warnings.push_back("point " + std::to_string(p) + " is never visible");
    }
  }

  // Column layout: first periods of every point, then second periods, ...
  struct Column {
    Index point;
    std::vector<std::pair<Index, Index>> spans;
  };
  std::vector<Column> columns;
  std::vector<bool> split(static_cast<size_t>(points), false);
  if (spec.split_reappearances) {
    std::vector<std::pair<Index, Index>> order;  // (-shortest period, point)
    for (Index p = 0; p < points; ++p) {
      const auto& ps = periods[static_cast<size_t>(p)];
      if (ps.size() < 2) continue;
      Index shortest = spec.num_frames;
      for (const auto& [b, e] : ps) shortest = std::min(shortest, e - b);
      order.push_back({-shortest, p});
    }
    std::sort(order.begin(), order.end());
    const size_t keep = spec.split_limit < 0 ? order.size()
                                             : std::min(order.size(), static_cast<size_t>(spec.split_limit));
    for (size_t k = 0; k < keep; ++k) split[static_cast<size_t>(order[k].second)] = true;
  }
  size_t max_periods = 1;
  for (Index p = 0; p < points; ++p) {
    if (split[static_cast<size_t>(p)]) max_periods = std::max(max_periods, periods[static_cast<size_t>(p)].size());
  }
  for (size_t k = 0; k < max_periods; ++k) {
    for (Index p = 0; p < points; ++p) {
      const auto& ps = periods[static_cast<size_t>(p)];
      if (!split[static_cast<size_t>(p)]) {
        if (k == 0) columns.push_back({p, ps});
      } else if (k < ps.size()) {
        columns.push_back({p, {ps[k]}});
      }
    }
  }

  const Index cols = static_cast<Index>(columns.size());
  Matrix values = Matrix::Zero(2 * frames, cols);
  Matrix mask = Matrix::Zero(2 * frames, cols);
  scene.noiseless.resize(2 * frames, cols);
  scene.true_plan.alpha = kDefaultAlpha;
  scene.true_plan.groups.assign(static_cast<size_t>(points), {});
  for (Index c = 0; c < cols; ++c) {
    const Column& col = columns[static_cast<size_t>(c)];
    scene.column_point.push_back(col.point);
    scene.true_plan.groups[static_cast<size_t>(col.point)].push_back(c);
    scene.noiseless.col(c) = clean.col(col.point);
    for (const auto& [b, e] : col.spans) {
      for (Index f = b; f < e; ++f) {
        for (Index k = 0; k < 2; ++k) {
          values(2 * f + k, c) = noisy(2 * f + k, col.point);
          mask(2 * f + k, c) = 1.0;
        }
      }
    }
  }
  scene.obs = MaskedMatrix(std::move(values), std::move(mask));
  return scene;
}

enum class MaskPattern { kBanded, kBlock, kRandom };

struct MaskSpec {
  MaskPattern pattern = MaskPattern::kBanded;
  Index rows = 0;
  Index cols = 0;
  // kBanded: fraction of observed entries; column j is observed on one
  // contiguous window of rows sliding down as j grows.
  double known_fraction = 0.5;
  // kBanded: this many leading (trailing) columns stay pinned to the top
  // (bottom) so that the corner rows are seen more than once.
  Index edge_cols = 0;
  // kBlock: the missing submatrix.
  Index block_row0 = 0, block_col0 = 0, block_rows = 0, block_cols = 0;
  // kRandom: i.i.d. probability that an entry is missing.
  double rate = 0.0;
  std::uint64_t seed = 1;
};

/// Binary mask (1 = observed).
inline Matrix gen_mask(const MaskSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw ParameterError("gen_mask: empty shape");
  Matrix mask = Matrix::Ones(spec.rows, spec.cols);
  switch (spec.pattern) {
    case MaskPattern::kBanded: {
      if (!(spec.known_fraction > 0.0 && spec.known_fraction <= 1.0) || spec.edge_cols < 0) {
        throw ParameterError("gen_mask: known_fraction must be in (0, 1] and edge_cols >= 0");
      }
      mask.setZero();
      const Index total = static_cast<Index>(
          std::llround(spec.known_fraction * static_cast<double>(spec.rows * spec.cols)));
      for (Index j = 0; j < spec.cols; ++j) {
        const Index h = std::min(spec.rows, total / spec.cols + (j < total % spec.cols ? 1 : 0));
        const Index span = spec.cols - 1 - 2 * spec.edge_cols;
        const double t = span > 0 ? std::clamp(static_cast<double>(j - spec.edge_cols) / static_cast<double>(span), 0.0, 1.0)
                                   : (spec.cols > 1 ? static_cast<double>(j) / static_cast<double>(spec.cols - 1) : 0.0);
        const Index start = static_cast<Index>(std::llround(t * static_cast<double>(spec.rows - h)));
        mask.block(start, j, h, 1).setOnes();
      }
      break;
    }
    case MaskPattern::kBlock:
      if (spec.block_rows < 0 || spec.block_cols < 0 || spec.block_row0 < 0 ||
          spec.block_col0 < 0 || spec.block_row0 + spec.block_rows > spec.rows ||
          spec.block_col0 + spec.block_cols > spec.cols) {
        throw ParameterError("gen_mask: missing block does not fit");
      }
      mask.block(spec.block_row0, spec.block_col0, spec.block_rows, spec.block_cols).setZero();
      break;
    case MaskPattern::kRandom: {
      if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
        throw ParameterError("gen_mask: rate must be in [0, 1)");
      }
      std::mt19937_64 rng(spec.seed);
      std::bernoulli_distribution missing(spec.rate);
      for (Index j = 0; j < spec.cols; ++j) {
        for (Index i = 0; i < spec.rows; ++i) {
          if (missing(rng)) mask(i, j) = 0.0;
        }
      }
      break;
    }
  }
  return mask;
}

/// Random rank-r matrix with nonnegative entries whose mean is `mean`.
inline Matrix low_rank_matrix(Index rows, Index cols, Index rank, double mean,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(rows, rank);
  Matrix b(rank, cols);
  for (Index k = 0; k < a.size(); ++k) a(k) = u(rng);
  for (Index k = 0; k < b.size(); ++k) b(k) = u(rng);
  Matrix m = a * b;
  return m * (mean / m.mean());
}

struct ThetaSample {
  double theta;
  double error;
};

/// error(theta) for a 2 x 2 observation with one missing entry: the rank-1
/// model a * [cos theta, sin theta] with a the masked least-squares column
/// for that row vector.
inline std::vector<ThetaSample> error_curve_theta(const MaskedMatrix& obs, Index samples) {
  if (obs.rows() != 2 || obs.cols() != 2) {
    throw ParameterError("error_curve_theta: observation must be 2 x 2");
  }
  if (obs.observed_count() != 3) {
    throw ParameterError("error_curve_theta: exactly one entry must be missing");
  }
  if (samples < 1) throw ParameterError("error_curve_theta: samples must be >= 1");
  std::vector<ThetaSample> out;
  out.reserve(static_cast<size_t>(samples));
  for (Index s = 0; s < samples; ++s) {
    const double theta = detail::kPi * static_cast<double>(s) / static_cast<double>(samples);
    const Eigen::RowVector2d b(std::cos(theta), std::sin(theta));
    Matrix a(2, 1);
    for (Index f = 0; f < 2; ++f) {
      double num = 0.0;
      double den = 0.0;
      for (Index j = 0; j < 2; ++j) {
        if (!obs.observed(f, j)) continue;
        num += obs.values()(f, j) * b(j);
        den += b(j) * b(j);
      }
      a(f, 0) = den > 0.0 ? num / den : 0.0;
    }
    out.push_back({theta, masked_frobenius(obs, Matrix(a * b))});
  }
  return out;
}

}  // namespace gfact
