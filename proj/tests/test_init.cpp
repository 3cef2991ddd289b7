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


#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gfact/init.hpp"
#include "gfact/synth.hpp"
#include "oracles.hpp"

namespace gfact {
namespace {

std::vector<Index> range(Index a, Index b) {
  std::vector<Index> v(static_cast<size_t>(b - a));
  std::iota(v.begin(), v.end(), a);
  return v;
}

Matrix take(const Matrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

TEST(ExtractBlock, CopiesObservedAndRejectsMissing) {
  Matrix v(3, 3);
  v << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Matrix m = Matrix::Ones(3, 3);
  m(2, 2) = 0.0;
  const MaskedMatrix obs(v, m);
  const CompleteBlock b = extract_block(obs, {0, 2}, {1, 0});
  Matrix expected(2, 2);
  expected << 2, 1, 8, 7;
  EXPECT_EQ(b.values, expected);
  EXPECT_THROW(extract_block(obs, {1, 2}, {2}), InitializationError);
  EXPECT_THROW(extract_block(obs, {3}, {0}), DimensionError);
}

// On exact rank-r data the partial factor reproduces the data on rows of the
// column block x columns of the row block.
TEST(SubspaceApprox, ExactOnNoiselessData) {
  std::mt19937_64 rng(21);
  const Index r = 3;
  const Matrix w = oracle::gaussian(20, r, rng) * oracle::gaussian(r, 15, rng);
  const MaskedMatrix obs = MaskedMatrix::full(w);
  const CompleteBlock col_block = extract_block(obs, range(0, 10), range(0, 5));
  const CompleteBlock row_block = extract_block(obs, range(5, 10), range(3, 13));
  const PartialFactor f = subspace_approx(col_block, row_block, r);
  EXPECT_EQ(f.rows, range(0, 10));
  EXPECT_EQ(f.cols, range(3, 13));
  EXPECT_LT((f.factor.product() - take(w, range(0, 10), range(3, 13))).norm(), 1e-10 * w.norm());
}

TEST(SubspaceApprox, Errors) {
  std::mt19937_64 rng(22);
  const MaskedMatrix obs = MaskedMatrix::full(oracle::gaussian(10, 10, rng));
  const CompleteBlock col_block = extract_block(obs, range(0, 5), range(0, 5));
  EXPECT_THROW(subspace_approx(col_block, extract_block(obs, range(4, 8), range(0, 5)), 2),
               InitializationError);
  EXPECT_THROW(subspace_approx(col_block, extract_block(obs, range(0, 1), range(0, 5)), 2),
               InitializationError);
  EXPECT_THROW(subspace_approx(col_block, col_block, 0), ParameterError);
  // A rank-1 column block cannot support a rank-2 column space.
  const MaskedMatrix flat =
      MaskedMatrix::full(oracle::gaussian(10, 1, rng) * oracle::gaussian(1, 10, rng));
  EXPECT_THROW(subspace_approx(extract_block(flat, range(0, 5), range(0, 5)),
                               extract_block(flat, range(0, 5), range(5, 10)), 2),
               InitializationError);
}

// Two partial bases of one column space in different gauges: the combined
// basis keeps the first gauge, and the transform maps the second onto it.
TEST(SubspaceCombine, StitchesGauges) {
  std::mt19937_64 rng(23);
  const Index r = 3;
  const Matrix a = oracle::gaussian(12, r, rng);
  const Matrix n1 = oracle::gaussian(r, r, rng) + 3.0 * Matrix::Identity(r, r);
  const Matrix n2 = oracle::gaussian(r, r, rng) + 3.0 * Matrix::Identity(r, r);
  PartialBasis b1{range(0, 8), take(a, range(0, 8), range(0, r)) * n1};
  PartialBasis b2{range(4, 12), take(a, range(4, 12), range(0, r)) * n2};
  const CombinedBasis c = subspace_combine(b1, b2);
  EXPECT_EQ(c.basis.indices, range(0, 12));
  EXPECT_LT((c.basis.basis - a * n1).norm(), 1e-10 * a.norm());
  EXPECT_LT((c.transform - n2.inverse() * n1).norm(), 1e-9);

  PartialBasis small{range(6, 12), take(a, range(6, 12), range(0, r))};
  EXPECT_THROW(subspace_combine(b1, small), CombinationError);
  PartialBasis wrong_rank{range(0, 8), Matrix::Ones(8, 2)};
  EXPECT_THROW(subspace_combine(b1, wrong_rank), DimensionError);
}

TEST(HeuristicInit, ExactOnNoiselessBandedData) {
  std::mt19937_64 rng(24);
  for (Index r : {1, 2, 4}) {
    const Matrix w = oracle::gaussian(24, r, rng) * oracle::gaussian(r, 24, rng);
    MaskSpec ms;
    ms.rows = 24;
    ms.cols = 24;
    ms.known_fraction = 0.5;
    ms.edge_cols = r;
    const MaskedMatrix obs(w, gen_mask(ms));
    const InitResult init = heuristic_init(obs, r);
    EXPECT_FALSE(init.fallback);
    EXPECT_FALSE(init.blocks.empty());
    EXPECT_LT((init.guess - w).norm(), 1e-8 * w.norm()) << "rank " << r << ": " << init.note;
  }
}

TEST(HeuristicInit, FallsBackToColumnMeans) {
  Matrix v(4, 4);
  v << 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 3, 0, 5, 0, 0, 4;
  Matrix m = Matrix::Identity(4, 4);
  m(3, 0) = 1.0;
  const MaskedMatrix obs(v, m);
  const InitResult init = heuristic_init(obs, 2);
  EXPECT_TRUE(init.fallback);
  EXPECT_FALSE(init.note.empty());
  EXPECT_DOUBLE_EQ(init.guess(1, 0), 3.0);  // mean of 1 and 5
  EXPECT_DOUBLE_EQ(init.guess(3, 0), 5.0);
  EXPECT_THROW(heuristic_init(obs, 2, InitOptions{1}), ParameterError);
  EXPECT_THROW(heuristic_init(obs, 5), ParameterError);
}

}  // namespace
}  // namespace gfact
