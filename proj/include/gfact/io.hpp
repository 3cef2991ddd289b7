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

// CSV storage of (masked) matrices. One matrix row per line, comma separated;
// a missing entry is the literal NaN.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfact/matrix_core.hpp"

namespace gfact {

namespace detail {

inline double parse_cell(const std::string& raw, const std::string& path, size_t line) {
  std::string cell;
  for (char c : raw) {
    if (c != ' ' && c != '\t' && c != '\r') cell.push_back(c);
  }
  if (cell == "NaN" || cell == "nan" || cell == "NAN") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size()) {
    throw ParameterError(path + ":" + std::to_string(line) + ": cannot parse '" + cell + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a dense CSV matrix. NaN cells are kept as NaN.
inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(detail::parse_cell(cell, path, line_no));
    if (!line.empty() && line.back() == ',') row.push_back(detail::parse_cell("", path, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DimensionError(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(rows.front().size()) + " columns, found " +
                           std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DimensionError(path + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  return m;
}

/// Writes with round-trip precision; NaN entries are written as NaN.
inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path);
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      if (std::isnan(m(i, j))) {
        out << "NaN";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        out << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw ParameterError("error writing " + path);
}

/// Observation from a CSV with NaN for missing entries, or from an explicit
/// 0/1 mask CSV when one is given (values under a 0 are then ignored).
inline MaskedMatrix load_observation(const std::string& path,
                                     const std::optional<std::string>& mask_path = std::nullopt) {
  Matrix values = read_matrix_csv(path);
  if (!mask_path) return MaskedMatrix::from_nan(values);
  Matrix mask = read_matrix_csv(*mask_path);
  detail::require_same_shape(values, mask, "load_observation");
  for (Index k = 0; k < values.size(); ++k) {
    if (mask(k) == 0.0) values(k) = 0.0;
  }
  return MaskedMatrix(std::move(values), std::move(mask));
}

inline void save_observation(const std::string& path, const MaskedMatrix& obs) {
  write_matrix_csv(path, obs.with_nan());
}

}  // namespace gfact
