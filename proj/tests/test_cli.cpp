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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gfact/bench.hpp"
#include "gfact/io.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace gfact {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("gfact_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd = std::string(GFACT_CLI) + " " + args + " >" + path("stdout.txt") +
                            " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  fs::path dir_;
};

TEST_F(Cli, SynthCylinderAndReproducibility) {
  write("cyl.json", R"({"preset": "cylinder"})");
  ASSERT_EQ(run("synth --config " + path("cyl.json") + " --out " + path("a")), 0);
  ASSERT_EQ(run("synth --config " + path("cyl.json") + " --out " + path("b")), 0);
  const Matrix obs = read_matrix_csv(path("a/obs.csv"));
  EXPECT_EQ(obs.rows(), 100);
  EXPECT_EQ(obs.cols(), 372);
  EXPECT_EQ(read("a/obs.csv"), read("b/obs.csv"));
  EXPECT_EQ(read("a/mask.csv"), read("b/mask.csv"));
  EXPECT_EQ(read("a/truth.json"), read("b/truth.json"));
  const auto manifest = nlohmann::json::parse(read("a/manifest.json"));
  EXPECT_EQ(manifest.at("subcommand"), "synth");
  EXPECT_EQ(manifest.at("scene").at("num_points"), 372);
}

TEST_F(Cli, SynthBadConfigExits2) {
  write("bad.json", R"({"num_points": 2})");
  EXPECT_EQ(run("synth --config " + path("bad.json") + " --out " + path("x")), 2);
  EXPECT_NE(read("stderr.txt").find("num_points"), std::string::npos);
  write("broken.json", "{");
  EXPECT_EQ(run("synth --config " + path("broken.json") + " --out " + path("x")), 2);
  EXPECT_EQ(run("synth"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, CompleteGoldenTwoByTwo) {
  write("g.csv", "-1,-1.95\n2,NaN\n");
  for (const char* init : {"heuristic", "constant"}) {
    ASSERT_EQ(run("complete " + path("g.csv") + " --algo rc --rank 1 --max-iter 500 --tol 1e-15 --init " +
                  init + " --out " + path("g_out.csv")),
              0)
        << init;
    const Matrix out = read_matrix_csv(path("g_out.csv"));
    EXPECT_NEAR(out(1, 1), 3.9, 1e-6);
    std::istringstream trace(read("g_out.trace.csv"));
    std::string line;
    std::string last;
    std::getline(trace, line);
    EXPECT_EQ(line, "iteration,masked_error,sigma1");
    while (std::getline(trace, line)) last = line;
    const double final_error = std::stod(last.substr(last.find(',') + 1));
    EXPECT_LT(final_error, 1e-9);
  }
  const auto manifest = nlohmann::json::parse(read("g_out.manifest.json"));
  EXPECT_EQ(manifest.at("init"), "constant");
  EXPECT_EQ(manifest.at("solver").at("rank"), 1);
}

TEST_F(Cli, CompleteFullMatrixEqualsTruncation) {
  std::mt19937_64 rng(71);
  const Matrix w = oracle::gaussian(8, 6, rng);
  write_matrix_csv(path("w.csv"), w);
  ASSERT_EQ(run("complete " + path("w.csv") + " --rank 2 --out " + path("w2.csv")), 0);
  EXPECT_LT((read_matrix_csv(path("w2.csv")) - oracle::rank_r_by_gram(w, 2)).norm(), 1e-9);
  ASSERT_EQ(run("complete " + path("w.csv") + " --algo em --rank 2 --out " + path("w3.csv")), 0);
  EXPECT_LT((read_matrix_csv(path("w3.csv")) - oracle::rank_r_by_gram(w, 2)).norm(), 1e-9);
}

TEST_F(Cli, CompleteExitCodes) {
  write("s.csv", "1,2,NaN\n3,4,NaN\n5,6,7\n8,9,NaN\n");
  EXPECT_EQ(run("complete " + path("s.csv") + " --rank 2 --init constant --out " + path("o.csv")), 4);
  EXPECT_NE(read("stderr.txt").find("column 2"), std::string::npos);
  EXPECT_EQ(run("complete " + path("s.csv") + " --rank 2 --init constant --min-norm --out " +
                path("o.csv")),
            0);
  EXPECT_NE(read("stderr.txt").find("warning"), std::string::npos);

  std::mt19937_64 rng(72);
  Matrix w = oracle::gaussian(10, 10, rng);
  w(0, 0) = std::nan("");
  write_matrix_csv(path("n.csv"), w);
  EXPECT_EQ(run("complete " + path("n.csv") + " --rank 2 --max-iter 1 --tol 1e-15 --out " + path("o.csv")), 3);
  EXPECT_EQ(run("complete " + path("n.csv") + " --rank 0 --out " + path("o.csv")), 2);
  EXPECT_EQ(run("complete " + path("n.csv") + " --algo xx --out " + path("o.csv")), 2);
  EXPECT_EQ(run("complete " + path("missing.csv")), 2);
}

TEST_F(Cli, GlobalAndSfmOnDetectionScene) {
  write("det.json", R"({"preset": "detection", "seed": 3})");
  ASSERT_EQ(run("synth --config " + path("det.json") + " --out " + path("d")), 0);
  ASSERT_EQ(run("global " + path("d/obs.csv") + " --out " + path("d/wr.csv") + " --plan " +
                path("d/plan.json")),
            0);
  const Matrix wr = read_matrix_csv(path("d/wr.csv"));
  EXPECT_EQ(wr.rows(), 60);
  EXPECT_EQ(wr.cols(), 40);
  const auto plan = nlohmann::json::parse(read("d/plan.json"));
  EXPECT_EQ(plan.at("groups").size(), 40u);
  EXPECT_TRUE(fs::exists(path("d/wr.manifest.json")));

  ASSERT_EQ(run("sfm " + path("d/wr.csv") + " --plan " + path("d/plan.json") + " --truth " +
                path("d/truth.json") + " --model " + path("d/model.json")),
            0);
  const auto report = nlohmann::json::parse(read("d/model.report.json"));
  EXPECT_LT(report.at("shape_rmse").get<double>(), 6.0);
  EXPECT_TRUE(fs::exists(path("d/model.ply")));
  // The original matrix with the plan applied gives the same model.
  ASSERT_EQ(run("sfm " + path("d/obs.csv") + " --plan " + path("d/plan.json") + " --model " +
                path("d/model2.json")),
            0);
  EXPECT_EQ(read("d/model.json"), read("d/model2.json"));
}

TEST_F(Cli, GlobalAlphaZeroKeepsIdentityOnExactData) {
  // Unmerged rank-1 fit is exact; the only mergeable pair leaves a residual.
  write("t.csv", "1,NaN,1\n2,NaN,2\nNaN,-2.1,-1.5\nNaN,0.7,0.5\n");
  ASSERT_EQ(run("global " + path("t.csv") + " --rank 1 --alpha 0 --min-norm --out " + path("t_wr.csv") +
                " --plan " + path("t_plan.json")),
            0);
  const auto plan = nlohmann::json::parse(read("t_plan.json"));
  EXPECT_EQ(plan.at("groups").size(), 3u);
  ASSERT_FALSE(plan.at("steps").empty());
  EXPECT_FALSE(plan.at("steps")[0].at("accepted").get<bool>());
}

TEST_F(Cli, SfmCylinderEndToEnd) {
  write("cyl.json", R"({"preset": "cylinder"})");
  ASSERT_EQ(run("synth --config " + path("cyl.json") + " --out " + path("c")), 0);
  ASSERT_EQ(run("sfm " + path("c/obs.csv") + " --truth " + path("c/truth.json") + " --model " +
                path("c/model.json")),
            0);
  const auto report = nlohmann::json::parse(read("c/model.report.json"));
  EXPECT_LT(report.at("shape_rmse").get<double>(), 6.0);
  std::ifstream ply(path("c/model.ply"));
  std::string header((std::istreambuf_iterator<char>(ply)), std::istreambuf_iterator<char>());
  EXPECT_NE(header.find("element vertex 372"), std::string::npos);
}

TEST_F(Cli, SfmPlanarExits5) {
  std::mt19937_64 rng(73);
  Matrix w(12, 20);
  const Matrix shape = oracle::gaussian(20, 2, rng);
  for (Index f = 0; f < 6; ++f) {
    const Eigen::Matrix3d r = oracle::rodrigues(Eigen::Vector3d(0.2, 1.0, 0.1), 0.2 * f);
    w.middleRows(2 * f, 2) = r.topLeftCorner(2, 2) * shape.transpose();
  }
  write_matrix_csv(path("planar.csv"), w);
  EXPECT_EQ(run("sfm " + path("planar.csv") + " --model " + path("p.json")), 5);
}

TEST_F(Cli, BenchUnknownSuiteAndSmallRun) {
  EXPECT_EQ(run("bench nope --out " + path("nope.csv")), 2);
  EXPECT_FALSE(fs::exists(path("nope.csv")));
  ASSERT_EQ(run("bench iter-cost --out " + path("ic.csv")), 0);
  const std::string csv = read("ic.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "size,algorithm,seconds_per_iteration");
  EXPECT_TRUE(fs::exists(path("ic.csv.manifest.json")));
}

}  // namespace
}  // namespace gfact
