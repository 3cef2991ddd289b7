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

// Heuristic rank-r initial guess for partially observed matrices, built by
// factorizing fully observed submatrices and stitching their column and row
// spaces together through their overlaps.

#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gfact/completion.hpp"
#include "gfact/matrix_core.hpp"

namespace gfact {

/// A fully observed submatrix of an observation.
struct CompleteBlock {
  std::vector<Index> row_indices;
  std::vector<Index> col_indices;
  Matrix values;
};

/// Extracts the submatrix at (rows, cols); throws if any entry is missing.
inline CompleteBlock extract_block(const MaskedMatrix& obs, std::vector<Index> rows,
                                   std::vector<Index> cols) {
  CompleteBlock block{std::move(rows), std::move(cols), Matrix()};
  block.values.resize(static_cast<Index>(block.row_indices.size()),
                      static_cast<Index>(block.col_indices.size()));
  for (size_t b = 0; b < block.col_indices.size(); ++b) {
    for (size_t a = 0; a < block.row_indices.size(); ++a) {
      const Index i = block.row_indices[a];
      const Index j = block.col_indices[b];
      if (i < 0 || i >= obs.rows() || j < 0 || j >= obs.cols()) {
        throw DimensionError("extract_block: index out of range");
      }
      if (!obs.observed(i, j)) {
        throw InitializationError("extract_block: entry (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") is not observed");
      }
      block.values(static_cast<Index>(a), static_cast<Index>(b)) = obs.values()(i, j);
    }
  }
  return block;
}

/// Rows of a basis matrix tagged with the indices they correspond to in the
/// full matrix. Used both for column spaces (indices are rows) and, on
/// transposed data, for row spaces (indices are columns).
struct PartialBasis {
  std::vector<Index> indices;
  Matrix basis;  // indices.size() x r
};

/// Factor over a block's index sets: col_space covers `rows`, row_space covers `cols`.
struct PartialFactor {
  std::vector<Index> rows;
  std::vector<Index> cols;
  LowRankFactor factor;
};

namespace detail {

inline double relative_rank_tol() { return 1e-10; }

inline bool full_column_rank(const Matrix& m) {
  if (m.rows() < m.cols()) return false;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(relative_rank_tol());
  return qr.rank() == m.cols();
}

}  // namespace detail

/// Column space from the left factor of col_block's rank-r truncation, row
/// space by least squares against row_block: B = (A_B^T A_B)^-1 A_B^T W_B,
/// where A_B holds the rows of A matching row_block's rows.
inline PartialFactor subspace_approx(const CompleteBlock& col_block,
                                     const CompleteBlock& row_block, Index r) {
  if (r < 1) throw ParameterError("subspace_approx: rank must be >= 1");
  if (col_block.values.rows() < r || col_block.values.cols() < r) {
    throw InitializationError("subspace_approx: column block smaller than rank");
  }
  if (row_block.values.rows() < r || row_block.values.cols() < r) {
    throw InitializationError("subspace_approx: row block smaller than rank");
  }
  PartialFactor out;
  out.rows = col_block.row_indices;
  out.cols = row_block.col_indices;
  const Matrix a = truncated_factor(col_block.values, r).col_space;

  std::map<Index, Index> position;
  for (size_t k = 0; k < col_block.row_indices.size(); ++k) {
    position[col_block.row_indices[k]] = static_cast<Index>(k);
  }
  Matrix a_b(static_cast<Index>(row_block.row_indices.size()), r);
  for (size_t k = 0; k < row_block.row_indices.size(); ++k) {
    const auto it = position.find(row_block.row_indices[k]);
    if (it == position.end()) {
      throw InitializationError("subspace_approx: row " +
                                std::to_string(row_block.row_indices[k]) +
                                " of the row block is not covered by the column block");
    }
    a_b.row(static_cast<Index>(k)) = a.row(it->second);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a_b);
  qr.setThreshold(detail::relative_rank_tol());
  if (qr.rank() < r) {
    throw InitializationError(
        "subspace_approx: restricted column space is rank deficient (the column block "
        "needs r linearly independent columns)");
  }
  out.factor.col_space = a;
  out.factor.row_space = qr.solve(row_block.values);
  return out;
}

struct CombinedBasis {
  PartialBasis basis;
  Matrix transform;  // N, with a1 on the overlap ~= a2 on the overlap * N
};

/// Stitches two partial bases of the same column space. On the shared
/// indices a1 ~= a2 * N; N is the least-squares solution, and the result is
/// a1 stacked over the rows unique to a2, mapped through N.
inline CombinedBasis subspace_combine(const PartialBasis& a1, const PartialBasis& a2) {
  const Index r = a1.basis.cols();
  if (a2.basis.cols() != r) throw DimensionError("subspace_combine: rank mismatch");
  if (static_cast<Index>(a1.indices.size()) != a1.basis.rows() ||
      static_cast<Index>(a2.indices.size()) != a2.basis.rows()) {
    throw DimensionError("subspace_combine: index list does not match basis rows");
  }
  std::map<Index, Index> pos1;
  for (size_t k = 0; k < a1.indices.size(); ++k) pos1[a1.indices[k]] = static_cast<Index>(k);

  std::vector<Index> shared1;
  std::vector<Index> shared2;
  std::vector<Index> unique2;
  for (size_t k = 0; k < a2.indices.size(); ++k) {
    const auto it = pos1.find(a2.indices[k]);
    if (it != pos1.end()) {
      shared1.push_back(it->second);
      shared2.push_back(static_cast<Index>(k));
    } else {
      unique2.push_back(static_cast<Index>(k));
    }
  }
  const Index n_shared = static_cast<Index>(shared1.size());
  if (n_shared < r) {
    throw CombinationError("subspace_combine: overlap of " + std::to_string(n_shared) +
                           " indices is smaller than rank " + std::to_string(r));
  }
  Matrix a12(n_shared, r);
  Matrix a21(n_shared, r);
  for (Index k = 0; k < n_shared; ++k) {
    a12.row(k) = a1.basis.row(shared1[static_cast<size_t>(k)]);
    a21.row(k) = a2.basis.row(shared2[static_cast<size_t>(k)]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a21);
  qr.setThreshold(detail::relative_rank_tol());
  if (qr.rank() < r) {
    throw CombinationError("subspace_combine: second basis is rank deficient on the overlap");
  }
  CombinedBasis out;
  out.transform = qr.solve(a12);
  out.basis.indices = a1.indices;
  out.basis.basis.resize(a1.basis.rows() + static_cast<Index>(unique2.size()), r);
  out.basis.basis.topRows(a1.basis.rows()) = a1.basis;
  for (size_t k = 0; k < unique2.size(); ++k) {
    out.basis.indices.push_back(a2.indices[static_cast<size_t>(unique2[k])]);
    out.basis.basis.row(a1.basis.rows() + static_cast<Index>(k)) =
        a2.basis.row(unique2[k]) * out.transform;
  }
  return out;
}

struct InitResult {
  Matrix guess;
  // True when no usable block chain was found and missing entries were filled
  // with column means instead.
  bool fallback = false;
  std::vector<CompleteBlock> blocks;
  std::string note;
};

struct InitOptions {
  // Rows (and seed columns) shared between consecutive blocks; 0 means
  // twice the rank.
  Index overlap = 0;
};

namespace detail {

inline std::vector<Index> intersect_sorted(const std::vector<Index>& a,
                                           const std::vector<Index>& b) {
  std::vector<Index> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Index count_in(const std::vector<Index>& a, const std::set<Index>& s) {
  Index n = 0;
  for (Index v : a) n += s.count(v) ? 1 : 0;
  return n;
}

// Chain of fully observed blocks. Columns are visited in order of first (then
// last) observed row; each block grows while its common row set stays >= r,
// keeps >= overlap rows shared with the rows already covered, and (once it has r
// columns and at least one new one) its area does not shrink. Every block
// after the first is seeded with the last `overlap` covered columns.
inline std::vector<std::pair<std::vector<Index>, std::vector<Index>>> find_block_chain(
    const MaskedMatrix& obs, const MaskIndex& index, Index r, Index overlap) {
  std::vector<Index> order;
  for (Index j = 0; j < obs.cols(); ++j) {
    if (!index.rows_of_col[static_cast<size_t>(j)].empty()) order.push_back(j);
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto& ra = index.rows_of_col[static_cast<size_t>(a)];
    const auto& rb = index.rows_of_col[static_cast<size_t>(b)];
    if (ra.front() != rb.front()) return ra.front() < rb.front();
    return ra.back() < rb.back();
  });

  std::vector<std::pair<std::vector<Index>, std::vector<Index>>> chain;
  std::set<Index> covered_rows;
  const size_t n = order.size();
  size_t pos = 0;
  while (pos < n) {
    std::vector<Index> cols;
    if (chain.empty()) {
      cols.push_back(order[pos]);
      ++pos;
    } else {
      if (pos < static_cast<size_t>(overlap)) break;
      cols.assign(order.begin() + static_cast<std::ptrdiff_t>(pos) - overlap,
                  order.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    std::vector<Index> rows = index.rows_of_col[static_cast<size_t>(cols.front())];
    for (size_t k = 1; k < cols.size(); ++k) {
      rows = intersect_sorted(rows, index.rows_of_col[static_cast<size_t>(cols[k])]);
    }
    const auto rows_ok = [&](const std::vector<Index>& cand) {
      if (static_cast<Index>(cand.size()) < r) return false;
      return chain.empty() || count_in(cand, covered_rows) >= overlap;
    };
    if (!rows_ok(rows)) break;

    size_t added = 0;
    while (pos < n) {
      std::vector<Index> cand =
          intersect_sorted(rows, index.rows_of_col[static_cast<size_t>(order[pos])]);
      if (!rows_ok(cand)) break;
      const bool grown = static_cast<Index>(cols.size()) >= r && added > 0;
      if (grown && cand.size() * (cols.size() + 1) < rows.size() * cols.size()) break;
      rows = std::move(cand);
      cols.push_back(order[pos]);
      ++pos;
      ++added;
    }
    if (static_cast<Index>(cols.size()) < r || (!chain.empty() && added == 0)) break;
    covered_rows.insert(rows.begin(), rows.end());
    std::vector<Index> sorted_cols = cols;
    std::sort(sorted_cols.begin(), sorted_cols.end());
    chain.emplace_back(std::move(rows), std::move(sorted_cols));
  }
  return chain;
}

inline Matrix column_mean_fill(const MaskedMatrix& obs) {
  const Index total = obs.observed_count();
  const double global_mean =
      total > 0 ? (obs.values().array() * obs.mask().array()).sum() / static_cast<double>(total)
                : 0.0;
  Matrix out = obs.values();
  for (Index j = 0; j < obs.cols(); ++j) {
    const double n = obs.mask().col(j).sum();
    const double mean = n > 0 ? obs.values().col(j).sum() / n : global_mean;
    for (Index i = 0; i < obs.rows(); ++i) {
      if (!obs.observed(i, j)) out(i, j) = mean;
    }
  }
  return out;
}

}  // namespace detail

/// Full-shape rank-r initial guess for an incomplete observation.
///
/// Fully observed blocks are found along the visibility structure, each is
/// factorized, and the column spaces (then, on transposed data, the row
/// spaces) are combined left to right. Rows or columns not covered by any
/// block are filled by one masked least-squares step against the combined
/// factor. If that is impossible the guess falls back to column means.
inline InitResult heuristic_init(const MaskedMatrix& obs, Index r, const InitOptions& opts = {}) {
  detail::require_rank(r, obs.rows(), obs.cols(), "heuristic_init");
  InitResult res;
  const detail::MaskIndex index(obs);
  if (opts.overlap != 0 && opts.overlap < r) {
    throw ParameterError("heuristic_init: overlap must be 0 or >= rank");
  }
  const auto chain = detail::find_block_chain(obs, index, r, opts.overlap == 0 ? 2 * r : opts.overlap);

  const auto fallback = [&](const std::string& why) {
    res.fallback = true;
    res.note = why;
    res.guess = detail::column_mean_fill(obs);
    return res;
  };
  if (chain.empty()) return fallback("no fully observed block of size >= rank found");

  std::vector<bool> row_known(static_cast<size_t>(obs.rows()), false);
  std::vector<bool> col_known(static_cast<size_t>(obs.cols()), false);
  Matrix a_full = Matrix::Zero(obs.rows(), r);
  Matrix b_full = Matrix::Zero(r, obs.cols());
  try {
    PartialBasis a_total;
    PartialBasis b_total;  // transposed row space: cols x r
    for (const auto& [rows, cols] : chain) {
      CompleteBlock block = extract_block(obs, rows, cols);
      PartialFactor f = subspace_approx(block, block, r);
      res.blocks.push_back(std::move(block));
      if (a_total.indices.empty()) {
        a_total = PartialBasis{f.rows, f.factor.col_space};
        b_total = PartialBasis{f.cols, f.factor.row_space.transpose()};
        continue;
      }
      const CombinedBasis ca = subspace_combine(a_total, PartialBasis{f.rows, f.factor.col_space});
      a_total = ca.basis;
      // Express this block's row space in the combined column-space basis.
      Eigen::FullPivLU<Matrix> lu(ca.transform);
      if (!lu.isInvertible()) throw CombinationError("heuristic_init: singular basis change");
      const Matrix b_block = lu.solve(f.factor.row_space);
      b_total = subspace_combine(b_total, PartialBasis{f.cols, b_block.transpose()}).basis;
    }
    for (size_t k = 0; k < a_total.indices.size(); ++k) {
      a_full.row(a_total.indices[k]) = a_total.basis.row(static_cast<Index>(k));
      row_known[static_cast<size_t>(a_total.indices[k])] = true;
    }
    for (size_t k = 0; k < b_total.indices.size(); ++k) {
      b_full.col(b_total.indices[k]) = b_total.basis.row(static_cast<Index>(k)).transpose();
      col_known[static_cast<size_t>(b_total.indices[k])] = true;
    }
  } catch (const Error& e) {
    return fallback(e.what());
  }

  // Extend to uncovered columns and rows by masked least squares. When every
  // remaining line has fewer than r usable entries, the line with the most is
  // solved in the minimum-norm sense and the sweep resumes.
  const auto solve_col = [&](Index j, bool min_norm) {
    std::vector<Index> rows;
    for (Index i : index.rows_of_col[static_cast<size_t>(j)]) {
      if (row_known[static_cast<size_t>(i)]) rows.push_back(i);
    }
    Matrix design(static_cast<Index>(rows.size()), r);
    Vector rhs(design.rows());
    for (size_t k = 0; k < rows.size(); ++k) {
      design.row(static_cast<Index>(k)) = a_full.row(rows[k]);
      rhs(static_cast<Index>(k)) = obs.values()(rows[k], j);
    }
    if (min_norm) {
      b_full.col(j) = design.completeOrthogonalDecomposition().solve(rhs);
    } else {
      if (!detail::full_column_rank(design)) return false;
      b_full.col(j) = design.colPivHouseholderQr().solve(rhs);
    }
    col_known[static_cast<size_t>(j)] = true;
    return true;
  };
  const auto solve_row = [&](Index i, bool min_norm) {
    std::vector<Index> cols;
    for (Index j : index.cols_of_row[static_cast<size_t>(i)]) {
      if (col_known[static_cast<size_t>(j)]) cols.push_back(j);
    }
    Matrix design(static_cast<Index>(cols.size()), r);
    Vector rhs(design.rows());
    for (size_t k = 0; k < cols.size(); ++k) {
      design.row(static_cast<Index>(k)) = b_full.col(cols[k]).transpose();
      rhs(static_cast<Index>(k)) = obs.values()(i, cols[k]);
    }
    if (min_norm) {
      a_full.row(i) = design.completeOrthogonalDecomposition().solve(rhs).transpose();
    } else {
      if (!detail::full_column_rank(design)) return false;
      a_full.row(i) = design.colPivHouseholderQr().solve(rhs).transpose();
    }
    row_known[static_cast<size_t>(i)] = true;
    return true;
  };
  const auto known_rows_in_col = [&](Index j) {
    Index n = 0;
    for (Index i : index.rows_of_col[static_cast<size_t>(j)]) n += row_known[static_cast<size_t>(i)];
    return n;
  };
  const auto known_cols_in_row = [&](Index i) {
    Index n = 0;
    for (Index j : index.cols_of_row[static_cast<size_t>(i)]) n += col_known[static_cast<size_t>(j)];
    return n;
  };
  Index approximate = 0;
  for (;;) {
    bool progress = false;
    for (Index j = 0; j < obs.cols(); ++j) {
      if (!col_known[static_cast<size_t>(j)] && known_rows_in_col(j) >= r) {
        progress = solve_col(j, false) || progress;
      }
    }
    for (Index i = 0; i < obs.rows(); ++i) {
      if (!row_known[static_cast<size_t>(i)] && known_cols_in_row(i) >= r) {
        progress = solve_row(i, false) || progress;
      }
    }
    if (progress) continue;
    Index best = 0, best_line = -1;
    bool best_is_col = true;
    for (Index j = 0; j < obs.cols(); ++j) {
      const Index n = col_known[static_cast<size_t>(j)] ? 0 : known_rows_in_col(j);
      if (n > best) best = n, best_line = j, best_is_col = true;
    }
    for (Index i = 0; i < obs.rows(); ++i) {
      const Index n = row_known[static_cast<size_t>(i)] ? 0 : known_cols_in_row(i);
      if (n > best) best = n, best_line = i, best_is_col = false;
    }
    if (best_line < 0) break;
    if (best_is_col) {
      solve_col(best_line, true);
    } else {
      solve_row(best_line, true);
    }
    ++approximate;
  }
  if (approximate > 0) {
    res.note = std::to_string(approximate) + " rows/columns extended with fewer than rank entries";
  }
  const auto missing_rows = std::count(row_known.begin(), row_known.end(), false);
  const auto missing_cols = std::count(col_known.begin(), col_known.end(), false);
  if (missing_rows > 0 || missing_cols > 0) {
    return fallback("block chain does not reach " + std::to_string(missing_rows) + " rows and " +
                    std::to_string(missing_cols) + " columns");
  }
  res.guess = a_full * b_full;
  return res;
}

}  // namespace gfact
