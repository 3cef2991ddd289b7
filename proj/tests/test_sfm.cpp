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

#include "gfact/sfm.hpp"
#include "oracles.hpp"

namespace gfact {
namespace {

RigidModel random_model(Index frames, Index points, std::mt19937_64& rng) {
  RigidModel m;
  m.rotations.resize(2 * frames, 3);
  m.translations = oracle::gaussian(2 * frames, 1, rng, 10.0);
  for (Index f = 0; f < frames; ++f) {
    const Eigen::Matrix3d r =
        oracle::rodrigues(Eigen::Vector3d(oracle::gaussian(3, 1, rng)), 0.1 + 0.05 * f);
    m.rotations.middleRows(2 * f, 2) = r.topRows(2);
  }
  m.shape = oracle::gaussian(points, 3, rng, 20.0);
  return m;
}

TEST(FactorizeSfm, RoundTripAndOrthonormalCameras) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 10; ++t) {
    const RigidModel truth = random_model(12, 30, rng);
    const Matrix w = truth.reproject();
    const RigidModel est = factorize_sfm(w);
    ASSERT_EQ(est.num_frames(), 12);
    ASSERT_EQ(est.num_points(), 30);
    for (Index f = 0; f < est.num_frames(); ++f) {
      const Matrix rf = est.rotations.middleRows(2 * f, 2);
      EXPECT_LT((rf * rf.transpose() - Matrix::Identity(2, 2)).norm(), 1e-8);
    }
    EXPECT_LT((est.reproject() - w).norm(), 1e-8 * w.norm());
    EXPECT_LT(error_report(est, truth).shape_rmse, 1e-7);
    EXPECT_LT(error_report(est, truth).motion_rmse, 1e-7);
  }
}

TEST(FactorizeSfm, MirrorExplainsTheSameData) {
  std::mt19937_64 rng(42);
  const RigidModel truth = random_model(8, 20, rng);
  EXPECT_LT((truth.mirrored().reproject() - truth.reproject()).norm(), 1e-9);
  const ErrorReport direct = error_report(truth, truth);
  EXPECT_FALSE(direct.mirrored);
  const ErrorReport flipped = error_report(truth.mirrored(), truth);
  EXPECT_TRUE(flipped.mirrored);
  EXPECT_LT(flipped.shape_rmse, 1e-9);
}

TEST(FactorizeSfm, DegenerateInputs) {
  std::mt19937_64 rng(43);
  RigidModel planar = random_model(10, 25, rng);
  planar.shape.col(2).setZero();
  EXPECT_THROW(factorize_sfm(planar.reproject()), DegenerateConfigurationError);
  EXPECT_THROW(factorize_sfm(Matrix::Ones(2, 10)), ParameterError);
  EXPECT_THROW(factorize_sfm(Matrix::Ones(6, 3)), ParameterError);
  Matrix nan = Matrix::Ones(6, 6);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(factorize_sfm(nan), ParameterError);
}

// Property: shape_error is invariant to any similarity applied to the
// estimate, and equals the plain RMS distance when already aligned.
TEST(ShapeErrorProperty, SimilarityInvariance) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int t = 0; t < 100; ++t) {
    const Matrix truth = oracle::gaussian(15, 3, rng, 5.0);
    const Matrix est = truth + oracle::gaussian(15, 3, rng, 0.5);
    const double base = shape_error(est, truth);
    const Eigen::Matrix3d r =
        oracle::rodrigues(Eigen::Vector3d(oracle::gaussian(3, 1, rng)), 2.0 * t / 100.0 + 0.1);
    const Eigen::RowVector3d shift = oracle::gaussian(1, 3, rng, 50.0);
    const Matrix moved = ((scale(rng) * est * r.transpose()).rowwise() + shift).eval();
    EXPECT_NEAR(shape_error(moved, truth), base, 1e-9 * (1.0 + base)) << "trial " << t;
    EXPECT_NEAR(shape_error(truth, truth), 0.0, 1e-9);
  }
  const Matrix x = oracle::gaussian(10, 3, rng);
  Matrix shifted = x;
  shifted.col(0).array() += 1.0;
  EXPECT_NEAR(shape_error(shifted, x), 0.0, 1e-9);
  EXPECT_THROW(align_similarity(x.topRows(2), x.topRows(2)), ParameterError);
}

TEST(AlignSimilarity, RecoversKnownTransform) {
  std::mt19937_64 rng(45);
  const Matrix x = oracle::gaussian(12, 3, rng);
  const Eigen::Matrix3d r = oracle::rodrigues(Eigen::Vector3d(1, 2, 3), 0.7);
  const Eigen::Vector3d t(1, -2, 3);
  const Matrix y = ((2.5 * x * r.transpose()).rowwise() + t.transpose()).eval();
  const Similarity s = align_similarity(x, y);
  EXPECT_NEAR(s.scale, 2.5, 1e-10);
  EXPECT_LT((s.rotation - r).norm(), 1e-10);
  EXPECT_LT((s.translation - t).norm(), 1e-9);
}

// Perturbing every camera by a small rotation d about a fixed axis, with the
// shape untouched, gives motion RMSE sqrt(mean ||R_f (d - I)||^2), which is
// theta * ||R_f [k]x|| to first order.
TEST(MotionError, SmallAngleOracle) {
  std::mt19937_64 rng(46);
  const RigidModel truth = random_model(10, 20, rng);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  Eigen::Matrix3d k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  for (double theta : {1e-4, 1e-3, 1e-2}) {
    const Eigen::Matrix3d d = oracle::rodrigues(axis, theta);
    RigidModel est = truth;
    est.rotations = truth.rotations * d;
    double exact = 0.0;
    double linear = 0.0;
    for (Index f = 0; f < truth.num_frames(); ++f) {
      const Matrix rf = truth.rotations.middleRows(2 * f, 2);
      exact += (rf * (d - Eigen::Matrix3d::Identity())).squaredNorm();
      linear += (theta * rf * k).squaredNorm();
    }
    exact = std::sqrt(exact / truth.num_frames());
    linear = std::sqrt(linear / truth.num_frames());
    EXPECT_NEAR(motion_error(est, truth), exact, 1e-12);
    EXPECT_NEAR(motion_error(est, truth) / linear, 1.0, 2.0 * theta);
  }
}

TEST(WritePly, HeaderAndVertexCount) {
  const std::string path = ::testing::TempDir() + "gfact_test.ply";
  Matrix shape(2, 3);
  shape << 1, 2, 3, 4, 5, 6;
  write_ply(path, shape);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("element vertex 2"), std::string::npos);
  EXPECT_NE(all.find("end_header\n1 2 3\n4 5 6\n"), std::string::npos);
}

}  // namespace
}  // namespace gfact
