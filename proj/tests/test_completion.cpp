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


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gfact/bench.hpp"
#include "gfact/completion.hpp"
#include "oracles.hpp"

namespace gfact {
namespace {

SolverConfig tight(Index rank, int max_iter) { return SolverConfig{rank, max_iter, 1e-15, 0.0, false}; }

TEST(Completion, GoldenTwoByTwoRc) {
  const MaskedMatrix obs = bench::golden_2x2();
  const double expected = obs.values()(0, 1) * obs.values()(1, 0) / obs.values()(0, 0);
  Matrix init = obs.values();
  init(1, 1) = 0.0;
  const CompletionResult rc = rc_complete(obs, init, tight(1, 500));
  EXPECT_LT(rc.final_error(), 1e-9);
  EXPECT_NEAR(rc.completed()(1, 1), expected, 1e-6);
  EXPECT_NEAR(expected, 3.9, 1e-12);
}

// Rank-1 completion of a 2 x 2 with one missing entry is w_a * w_b / w_c.
TEST(Completion, TwoByTwoAnalyticOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::bernoulli_distribution sign(0.5);
  for (int t = 0; t < 100; ++t) {
    Matrix v(2, 2);
    for (Index k = 0; k < 4; ++k) v(k) = (sign(rng) ? -1.0 : 1.0) * u(rng);
    const Index mi = t % 2;
    const Index mj = (t / 2) % 2;
    Matrix m = Matrix::Ones(2, 2);
    m(mi, mj) = 0.0;
    const MaskedMatrix obs(v, m);
    const double oracle = v(mi, 1 - mj) * v(1 - mi, mj) / v(1 - mi, 1 - mj);
    Matrix init = obs.values();
    init(mi, mj) = 0.0;
    const CompletionResult rc = rc_complete(obs, init, tight(1, 2000));
    EXPECT_LT(rc.final_error(), 1e-9) << "trial " << t;
    EXPECT_NEAR(rc.completed()(mi, mj), oracle, 1e-6 * std::max(1.0, std::abs(oracle)))
        << "trial " << t;
  }
}

// Property: the masked error never increases along EM or RC iterations.
TEST(CompletionProperty, MaskedErrorMonotoneOver1000Instances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Index> size(4, 12);
  std::uniform_int_distribution<Index> rank(1, 3);
  std::uniform_real_distribution<double> rate(0.1, 0.5);
  int em_violations = 0;
  int rc_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index rows = size(rng);
    const Index cols = size(rng);
    const Index r = std::min({rank(rng), rows - 1, cols - 1});
    const Matrix truth = oracle::gaussian(rows, r, rng) * oracle::gaussian(r, cols, rng);
    const Matrix noisy = truth + oracle::gaussian(rows, cols, rng, 0.1);
    const Matrix mask = oracle::random_mask(rows, cols, rate(rng), r + 1, rng);
    const MaskedMatrix obs(noisy, mask);
    const Matrix init = obs.filled(oracle::gaussian(rows, cols, rng));
    const SolverConfig cfg{r, 30, 1e-300, 0.0, false};
    const auto monotone = [](const std::vector<double>& trace) {
      for (size_t k = 1; k < trace.size(); ++k) {
        if (trace[k] > trace[k - 1] * (1.0 + 1e-10) + 1e-12) return false;
      }
      return true;
    };
    if (!monotone(em_complete(obs, init, cfg).error_trace)) ++em_violations;
    if (!monotone(rc_complete(obs, init, cfg).error_trace)) ++rc_violations;
  }
  EXPECT_EQ(em_violations, 0);
  EXPECT_EQ(rc_violations, 0);
}

// Property: with nothing missing, RC is orthogonal iteration and lands on the
// dominant left singular subspace.
TEST(CompletionProperty, CompleteMaskRcMatchesPowerMethod) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const Index r = 1 + t % 4;
    const Matrix w = oracle::gaussian(15, r, rng) * oracle::gaussian(r, 12, rng) * 5.0 +
                     oracle::gaussian(15, 12, rng, 0.3);
    const MaskedMatrix obs = MaskedMatrix::full(w);
    const CompletionResult rc =
        rc_complete(obs, oracle::gaussian(15, 12, rng), SolverConfig{r, 300, 1e-300, 0.0, false});
    const Matrix power = oracle::power_subspace(w, r, 400, 99 + static_cast<std::uint64_t>(t));
    EXPECT_LT(std::asin(std::min(1.0, oracle::sin_angle(rc.estimate.col_space, power))), 1e-8)
        << "trial " << t;
    EXPECT_LT(subspace_angle(rc.estimate.col_space, power), 1e-8);
  }
}

// Property: with nothing missing, the EM M-step is the truncated
// decomposition of the data whatever the initial guess.
TEST(CompletionProperty, CompleteMaskEmStepIsTruncatedDecomposition) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    const Index r = 1 + t % 3;
    const Matrix w = oracle::gaussian(9, 7, rng);
    const MaskedMatrix obs = MaskedMatrix::full(w);
    const CompletionResult em = em_complete(obs, oracle::gaussian(9, 7, rng), tight(r, 1));
    const Matrix expected = oracle::rank_r_by_gram(w, r);
    EXPECT_LT((em.completed() - expected).norm(), 1e-9 * w.norm()) << "trial " << t;
    EXPECT_NEAR(em.final_error(), (w - expected).norm(), 1e-9 * w.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(w.transpose() * w);
    EXPECT_NEAR(em.sigma1_trace[0], std::sqrt(es.eigenvalues().maxCoeff()), 1e-9 * w.norm());
  }
}

TEST(Completion, NoiselessRecoveryFromTruthNeighbourhood) {
  std::mt19937_64 rng(14);
  const Matrix truth = oracle::gaussian(20, 3, rng) * oracle::gaussian(3, 18, rng);
  const Matrix mask = oracle::random_mask(20, 18, 0.4, 5, rng);
  const MaskedMatrix obs(truth, mask);
  const Matrix init = truth + oracle::gaussian(20, 18, rng, 1e-2);
  for (Algorithm a : {Algorithm::kEm, Algorithm::kRc}) {
    const CompletionResult res = complete(a, obs, init, tight(3, 3000));
    EXPECT_LT((res.completed() - truth).norm(), 1e-5 * truth.norm());
  }
}

TEST(Completion, UnderDeterminedColumnThrowsNamingIt) {
  std::mt19937_64 rng(12);
  const Matrix v = oracle::gaussian(5, 4, rng);
  Matrix m = Matrix::Ones(5, 4);
  m.col(2).setZero();
  m(3, 2) = 1.0;
  const MaskedMatrix obs(v, m);
  try {
    rc_complete(obs, obs.filled(oracle::gaussian(5, 4, rng)), SolverConfig{2, 10, 1e-9, 0.0, false});
    FAIL() << "expected SingularSystemError";
  } catch (const SingularSystemError& e) {
    EXPECT_EQ(e.axis(), SingularSystemError::Axis::kColumn);
    EXPECT_EQ(e.index(), 2);
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(Completion, MinNormWarnsOnceAndRidgeRegularizes) {
  std::mt19937_64 rng(15);
  const Matrix v = oracle::gaussian(5, 4, rng);
  Matrix m = Matrix::Ones(5, 4);
  m.col(2).setZero();
  m(3, 2) = 1.0;
  const MaskedMatrix obs(v, m);
  const CompletionResult res =
      rc_complete(obs, obs.filled(Matrix::Ones(5, 4)), SolverConfig{2, 25, 1e-300, 0.0, true});
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("column 2"), std::string::npos);
  EXPECT_TRUE(res.completed().allFinite());

  const CompletionResult ridge =
      rc_complete(obs, obs.filled(Matrix::Ones(5, 4)), SolverConfig{2, 25, 1e-9, 1e-3, false});
  EXPECT_TRUE(ridge.completed().allFinite());
  EXPECT_TRUE(ridge.warnings.empty());
}

TEST(Completion, RejectsBadArguments) {
  const MaskedMatrix obs = MaskedMatrix::full(Matrix::Ones(4, 4));
  EXPECT_THROW(em_complete(obs, Matrix::Ones(4, 3), tight(1, 5)), DimensionError);
  Matrix nan_init = Matrix::Ones(4, 4);
  nan_init(0, 0) = std::nan("");
  EXPECT_THROW(rc_complete(obs, nan_init, tight(1, 5)), ParameterError);
  EXPECT_THROW(em_complete(obs, Matrix::Ones(4, 4), tight(5, 5)), ParameterError);
  EXPECT_THROW(em_complete(obs, Matrix::Ones(4, 4), SolverConfig{1, 0, 1e-9, 0.0, false}),
               ParameterError);
  EXPECT_THROW(rc_complete_from(obs, Matrix::Ones(3, 1), tight(1, 5)), DimensionError);
}

TEST(Completion, ConvergenceFlagAndTraceLengths) {
  std::mt19937_64 rng(16);
  const Matrix w = oracle::gaussian(10, 3, rng) * oracle::gaussian(3, 10, rng) +
                   oracle::gaussian(10, 10, rng, 0.05);
  const MaskedMatrix obs(w, oracle::random_mask(10, 10, 0.3, 4, rng));
  const Matrix init = obs.filled(Matrix::Zero(10, 10));
  const CompletionResult one = rc_complete(obs, init, SolverConfig{3, 1, 1e-12, 0.0, false});
  EXPECT_FALSE(one.converged);
  EXPECT_EQ(one.iterations, 1);
  const CompletionResult full = rc_complete(obs, init, SolverConfig{3, 5000, 1e-6, 0.0, false});
  EXPECT_TRUE(full.converged);
  EXPECT_EQ(full.error_trace.size(), static_cast<size_t>(full.iterations));
  EXPECT_EQ(full.sigma1_trace.size(), full.error_trace.size());
  EXPECT_NEAR(full.sigma1_trace.back(), singular_values(full.completed())(0), 1e-9 * w.norm());
}

}  // namespace
}  // namespace gfact
