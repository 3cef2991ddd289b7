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

// JSON forms of the library types used by the command-line tool.

#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "gfact/bench.hpp"
#include "gfact/completion.hpp"
#include "gfact/global_factorization.hpp"
#include "gfact/sfm.hpp"
#include "gfact/synth.hpp"
#include "json.hpp"

namespace gfact::json_io {

using nlohmann::json;

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError(path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ParameterError(std::string(what) + ": expected a non-empty array of rows");
  }
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(j.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != m.cols()) {
      throw ParameterError(std::string(what) + ": ragged rows");
    }
    for (Index k = 0; k < m.cols(); ++k) m(i, k) = row[static_cast<size_t>(k)].get<double>();
  }
  return m;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParameterError(std::string(what) + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

// ---------------------------------------------------------------------------

inline json to_json(const SceneSpec& s) {
  return {
      {"shape", s.shape == ShapeKind::kCylinder ? "cylinder" : "random-box"},
      {"num_points", s.num_points},
      {"num_frames", s.num_frames},
      {"sweep_deg", s.sweep_deg},
      {"axis", {s.axis.x(), s.axis.y(), s.axis.z()}},
      {"tilt_deg", s.tilt_deg},
      {"noise_std", s.noise_std},
      {"drift", s.drift},
      {"window", {s.window_x_min, s.window_x_max, s.window_y_min, s.window_y_max}},
      {"cylinder_rings", s.cylinder_rings},
      {"cylinder_radius", s.cylinder_radius},
      {"cylinder_height", s.cylinder_height},
      {"cylinder_angle_offset_deg", s.cylinder_angle_offset_deg},
      {"visible_arc_deg", s.visible_arc_deg},
      {"min_visible", s.min_visible},
      {"max_visible", s.max_visible},
      {"num_interrupted", s.num_interrupted},
      {"gap_min", s.gap_min},
      {"gap_max", s.gap_max},
      {"min_period", s.min_period},
      {"min_per_frame", s.min_per_frame},
      {"split_reappearances", s.split_reappearances},
      {"split_limit", s.split_limit},
      {"seed", s.seed},
  };
}

/// Scene spec from a config object. "preset" ("cylinder" | "detection")
/// selects the reference scene; any other key overrides one field. Unknown
/// keys are rejected.
inline SceneSpec scene_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("scene config must be a JSON object");
  SceneSpec s;
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "cylinder") {
      s = bench::cylinder_scene(3.0, 1);
    } else if (p == "detection") {
      s = bench::detection_scene(3.0, 1);
    } else {
      throw ParameterError("unknown preset '" + p + "' (expected cylinder or detection)");
    }
  }
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      if (key == "shape") {
        const std::string k = v.get<std::string>();
        if (k == "cylinder") {
          s.shape = ShapeKind::kCylinder;
        } else if (k == "random-box") {
          s.shape = ShapeKind::kRandomBox;
        } else {
          throw ParameterError("shape must be cylinder or random-box, got '" + k + "'");
        }
      } else if (key == "num_points") {
        s.num_points = v.get<Index>();
      } else if (key == "num_frames") {
        s.num_frames = v.get<Index>();
      } else if (key == "sweep_deg") {
        s.sweep_deg = v.get<double>();
      } else if (key == "axis") {
        const auto a = v.get<std::vector<double>>();
        if (a.size() != 3) throw ParameterError("axis must have three components");
        s.axis = Eigen::Vector3d(a[0], a[1], a[2]);
      } else if (key == "tilt_deg") {
        s.tilt_deg = v.get<double>();
      } else if (key == "noise_std") {
        s.noise_std = v.get<double>();
      } else if (key == "drift") {
        s.drift = v.get<double>();
      } else if (key == "window") {
        const auto w = v.get<std::vector<double>>();
        if (w.size() != 4) throw ParameterError("window must be [x_min, x_max, y_min, y_max]");
        s.window_x_min = w[0];
        s.window_x_max = w[1];
        s.window_y_min = w[2];
        s.window_y_max = w[3];
      } else if (key == "cylinder_rings") {
        s.cylinder_rings = v.get<Index>();
      } else if (key == "cylinder_radius") {
        s.cylinder_radius = v.get<double>();
      } else if (key == "cylinder_height") {
        s.cylinder_height = v.get<double>();
      } else if (key == "cylinder_angle_offset_deg") {
        s.cylinder_angle_offset_deg = v.get<double>();
      } else if (key == "visible_arc_deg") {
        s.visible_arc_deg = v.get<double>();
      } else if (key == "min_visible") {
        s.min_visible = v.get<Index>();
      } else if (key == "max_visible") {
        s.max_visible = v.get<Index>();
      } else if (key == "num_interrupted") {
        s.num_interrupted = v.get<Index>();
      } else if (key == "gap_min") {
        s.gap_min = v.get<Index>();
      } else if (key == "gap_max") {
        s.gap_max = v.get<Index>();
      } else if (key == "min_period") {
        s.min_period = v.get<Index>();
      } else if (key == "min_per_frame") {
        s.min_per_frame = v.get<Index>();
      } else if (key == "split_reappearances") {
        s.split_reappearances = v.get<bool>();
      } else if (key == "split_limit") {
        s.split_limit = v.get<Index>();
      } else if (key == "seed") {
        s.seed = v.get<std::uint64_t>();
      } else {
        throw ParameterError("unknown scene key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParameterError(std::string("scene config: ") + e.what());
  }
  s.validate();
  return s;
}

inline json to_json(const SolverConfig& c) {
  return {{"rank", c.rank},
          {"max_iter", c.max_iter},
          {"tol", c.tol},
          {"ridge", c.ridge},
          {"min_norm_underdetermined", c.min_norm_underdetermined}};
}

inline json to_json(const MergeStep& s) {
  return {{"round", s.round},
          {"group_i", s.group_i},
          {"group_j", s.group_j},
          {"cost_before", s.cost_before},
          {"cost_after", s.cost_after},
          {"candidates", s.candidates},
          {"accepted", s.accepted}};
}

inline json to_json(const MergePlan& p) {
  return {{"alpha", p.alpha}, {"groups", p.groups}};
}

inline MergePlan plan_from_json(const json& j, Index original_cols) {
  MergePlan p;
  try {
    p.alpha = j.value("alpha", kDefaultAlpha);
    p.groups = j.at("groups").get<std::vector<std::vector<Index>>>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("merge plan: ") + e.what());
  }
  std::set<Index> seen;
  for (const auto& g : p.groups) {
    if (g.empty()) throw ParameterError("merge plan: empty group");
    for (Index c : g) {
      if (c < 0 || c >= original_cols || !seen.insert(c).second) {
        throw ParameterError("merge plan: groups must partition columns 0.." +
                             std::to_string(original_cols - 1));
      }
    }
  }
  if (static_cast<Index>(seen.size()) != original_cols) {
    throw ParameterError("merge plan: groups must cover all " + std::to_string(original_cols) +
                         " columns");
  }
  return p;
}

inline json to_json(const GlobalResult& r) {
  json steps = json::array();
  for (const auto& s : r.per_step_costs) steps.push_back(to_json(s));
  json out = to_json(r.plan);
  out["cost"] = r.cost;
  out["masked_error"] = r.fit.final_error();
  out["columns_in"] = r.plan.groups.empty() ? 0 : [&] {
    Index n = 0;
    for (const auto& g : r.plan.groups) n += static_cast<Index>(g.size());
    return n;
  }();
  out["columns_out"] = r.plan.num_columns();
  out["steps"] = std::move(steps);
  out["warnings"] = r.warnings;
  return out;
}

inline json to_json(const RigidModel& m) {
  return {{"rotations", to_json(m.rotations)},
          {"translations", to_json(m.translations)},
          {"shape", to_json(m.shape)}};
}

inline RigidModel model_from_json(const json& j) {
  RigidModel m;
  try {
    m.rotations = matrix_from_json(j.at("rotations"), "rotations");
    m.translations = vector_from_json(j.at("translations"), "translations");
    m.shape = matrix_from_json(j.at("shape"), "shape");
  } catch (const json::exception& e) {
    throw ParameterError(std::string("rigid model: ") + e.what());
  }
  if (m.rotations.cols() != 3 || m.rotations.rows() != m.translations.size() ||
      m.shape.cols() != 3) {
    throw ParameterError("rigid model: expected 2F x 3 rotations, 2F translations, P x 3 shape");
  }
  return m;
}

/// Ground-truth sidecar written by `synth`.
struct Truth {
  RigidModel model;                 // one shape row per physical point
  std::vector<Index> column_point;  // physical point of every observation column
  MergePlan true_plan;
};

inline json to_json(const Scene& s, const SceneSpec& spec) {
  return {{"spec", to_json(spec)},
          {"model", to_json(s.truth)},
          {"column_point", s.column_point},
          {"true_plan", to_json(s.true_plan)},
          {"warnings", s.warnings}};
}

inline Truth truth_from_json(const json& j) {
  Truth t;
  try {
    t.model = model_from_json(j.at("model"));
    t.column_point = j.at("column_point").get<std::vector<Index>>();
    t.true_plan = plan_from_json(j.at("true_plan"), static_cast<Index>(t.column_point.size()));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("truth sidecar: ") + e.what());
  }
  for (Index p : t.column_point) {
    if (p < 0 || p >= t.model.num_points()) throw ParameterError("truth sidecar: bad column_point");
  }
  return t;
}

inline json to_json(const ErrorReport& r) {
  return {{"shape_rmse", r.shape_rmse},
          {"motion_rmse", r.motion_rmse},
          {"mirrored", r.mirrored},
          {"per_point", to_json(r.per_point)}};
}

}  // namespace gfact::json_io
