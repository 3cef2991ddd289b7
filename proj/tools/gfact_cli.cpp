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

// gfact_cli: synthetic data, matrix completion, global factorization, rigid
// reconstruction and benchmark sweeps.
//
// Exit codes: 0 ok, 2 bad configuration or input, 3 no convergence,
// 4 singular least-squares system, 5 degenerate configuration, 1 other.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfact/bench.hpp"
#include "gfact/completion.hpp"
#include "gfact/global_factorization.hpp"
#include "gfact/init.hpp"
#include "gfact/io.hpp"
#include "gfact/sfm.hpp"
#include "gfact/synth.hpp"
#include "json_io.hpp"

namespace fs = std::filesystem;
using gfact::Index;
using gfact::Matrix;
using gfact::json_io::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNoConvergence = 3, kSingular = 4, kDegenerate = 5 };

struct SolverFlags {
  std::string algo = "rc";
  Index rank = 4;
  double tol = 1e-9;
  int max_iter = 300;
  double ridge = 0.0;
  bool min_norm = false;

  void add_to(CLI::App* app) {
    app->add_option("--algo", algo, "em or rc")->check(CLI::IsMember({"em", "rc"}))->capture_default_str();
    app->add_option("--rank", rank)->capture_default_str();
    app->add_option("--tol", tol, "relative change of the masked error")->capture_default_str();
    app->add_option("--max-iter", max_iter)->capture_default_str();
    app->add_option("--ridge", ridge)->capture_default_str();
    app->add_flag("--min-norm", min_norm,
                  "minimum-norm solve for under-determined rows/columns instead of failing");
  }

  gfact::SolverConfig config() const {
    gfact::SolverConfig c{rank, max_iter, tol, ridge, min_norm};
    c.validate();
    return c;
  }
  gfact::Algorithm algorithm() const {
    return algo == "em" ? gfact::Algorithm::kEm : gfact::Algorithm::kRc;
  }
};

struct Manifest {
  json j = json::object();

  Manifest(const std::string& sub, int argc, char** argv) {
    j["subcommand"] = sub;
    std::vector<std::string> args(argv + 1, argv + argc);
    j["args"] = args;
    j["inputs"] = json::object();
    j["outputs"] = json::object();
  }
  void solver(const SolverFlags& f) {
    j["algorithm"] = f.algo;
    j["solver"] = gfact::json_io::to_json(f.config());
  }
  void write(const std::string& path) {
    j["outputs"]["manifest"] = path;
    gfact::json_io::write_file(path, j);
  }
};

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

Matrix initial_guess(const gfact::MaskedMatrix& obs, const std::string& kind, Index rank,
                     std::uint64_t seed, std::vector<std::string>& notes) {
  if (kind == "heuristic") {
    gfact::InitResult init = gfact::heuristic_init(obs, rank);
    if (init.fallback) notes.push_back("heuristic init fell back to column means: " + init.note);
    else if (!init.note.empty()) notes.push_back(init.note);
    return init.guess;
  }
  const Index n = obs.observed_count();
  if (n == 0) throw gfact::ParameterError("no observed entries");
  const double mean = (obs.values().array() * obs.mask().array()).sum() / static_cast<double>(n);
  if (kind == "constant") return obs.filled(Matrix::Constant(obs.rows(), obs.cols(), mean));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::abs(mean));
  Matrix guess(obs.rows(), obs.cols());
  for (Index k = 0; k < guess.size(); ++k) guess(k) = u(rng);
  return obs.filled(guess);
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

// ---------------------------------------------------------------------------

int run_synth(const std::string& config, const std::string& out_dir, int argc, char** argv) {
  const gfact::SceneSpec spec = gfact::json_io::scene_from_json(gfact::json_io::read_file(config));
  const gfact::Scene scene = gfact::gen_scene(spec);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  gfact::save_observation((dir / "obs.csv").string(), scene.obs);
  gfact::write_matrix_csv((dir / "mask.csv").string(), scene.obs.mask());
  gfact::json_io::write_file((dir / "truth.json").string(), gfact::json_io::to_json(scene, spec));
  print_warnings(scene.warnings);

  Manifest m("synth", argc, argv);
  m.j["inputs"]["config"] = config;
  m.j["outputs"] = {{"observation", (dir / "obs.csv").string()},
                    {"mask", (dir / "mask.csv").string()},
                    {"truth", (dir / "truth.json").string()}};
  m.j["seed"] = spec.seed;
  m.j["scene"] = gfact::json_io::to_json(spec);
  m.write((dir / "manifest.json").string());
  std::cout << "wrote " << scene.obs.rows() << "x" << scene.obs.cols() << " observation, "
            << 100.0 * scene.obs.known_fraction() << "% known, to " << out_dir << '\n';
  return kOk;
}

struct CompleteArgs {
  std::string input, mask, out = "completed.csv", trace, init = "heuristic";
  std::uint64_t seed = 1;
  SolverFlags solver;
};

int run_complete(const CompleteArgs& a, int argc, char** argv) {
  const gfact::MaskedMatrix obs = gfact::load_observation(
      a.input, a.mask.empty() ? std::nullopt : std::optional<std::string>(a.mask));
  const gfact::SolverConfig cfg = a.solver.config();
  std::vector<std::string> notes;
  const Matrix guess = initial_guess(obs, a.init, cfg.rank, a.seed, notes);
  const gfact::CompletionResult res = gfact::complete(a.solver.algorithm(), obs, guess, cfg);
  print_warnings(notes);
  print_warnings(res.warnings);

  const std::string trace = a.trace.empty() ? sibling(a.out, ".trace.csv") : a.trace;
  gfact::write_matrix_csv(a.out, res.completed());
  {
    std::ofstream t(trace);
    if (!t) throw gfact::ParameterError("cannot write " + trace);
    t.precision(17);
    t << "iteration,masked_error,sigma1\n";
    t << 0 << ',' << res.initial_error << ',' << res.initial_sigma1 << '\n';
    for (size_t k = 0; k < res.error_trace.size(); ++k) {
      t << k + 1 << ',' << res.error_trace[k] << ',' << res.sigma1_trace[k] << '\n';
    }
  }

  Manifest m("complete", argc, argv);
  m.solver(a.solver);
  m.j["init"] = a.init;
  m.j["seed"] = a.seed;
  m.j["inputs"] = {{"observation", a.input}, {"mask", a.mask}};
  m.j["outputs"] = {{"completed", a.out}, {"trace", trace}};
  m.j["result"] = {{"iterations", res.iterations},
                   {"converged", res.converged},
                   {"masked_error", res.final_error()},
                   {"warnings", res.warnings}};
  m.write(sibling(a.out, ".manifest.json"));

  std::printf("%s: %d iterations, masked error %.6g%s\n", a.solver.algo.c_str(), res.iterations,
              res.final_error(), res.converged ? "" : " (not converged)");
  return res.converged ? kOk : kNoConvergence;
}

struct GlobalArgs {
  std::string input, mask, out = "wr.csv", plan = "plan.json", completed;
  double alpha = gfact::kDefaultAlpha;
  double proximity = 0.0;
  SolverFlags solver;
};

int run_global(const GlobalArgs& a, int argc, char** argv) {
  const gfact::MaskedMatrix obs = gfact::load_observation(
      a.input, a.mask.empty() ? std::nullopt : std::optional<std::string>(a.mask));
  if (!(a.alpha >= 0.0)) throw gfact::ParameterError("--alpha must be >= 0");
  gfact::GlobalConfig cfg;
  cfg.alpha = a.alpha;
  cfg.algorithm = a.solver.algorithm();
  cfg.final_fit = a.solver.config();
  cfg.screening.rank = cfg.final_fit.rank;
  cfg.screening.ridge = cfg.final_fit.ridge;
  cfg.screening.min_norm_underdetermined = cfg.final_fit.min_norm_underdetermined;
  if (a.proximity > 0.0) {
    cfg.proximity_filter = true;
    cfg.proximity_radius = a.proximity;
  }
  const gfact::GlobalResult res = gfact::global_rearrange(obs, cfg);
  print_warnings(res.warnings);

  gfact::save_observation(a.out, res.rearranged);
  gfact::json_io::write_file(a.plan, gfact::json_io::to_json(res));
  if (!a.completed.empty()) gfact::write_matrix_csv(a.completed, res.fit.completed());

  Manifest m("global", argc, argv);
  m.solver(a.solver);
  m.j["alpha"] = a.alpha;
  m.j["init"] = "heuristic";
  m.j["inputs"] = {{"observation", a.input}, {"mask", a.mask}};
  m.j["outputs"] = {{"rearranged", a.out}, {"plan", a.plan}, {"completed", a.completed}};
  m.write(sibling(a.out, ".manifest.json"));

  std::printf("%td -> %td columns, %.1f%% -> %.1f%% known, cost %.6g\n", obs.cols(),
              res.rearranged.cols(), 100.0 * obs.known_fraction(),
              100.0 * res.rearranged.known_fraction(), res.cost);
  return kOk;
}

struct SfmArgs {
  std::string input, mask, plan, truth, model = "model.json", ply, report;
  SolverFlags solver;
};

int run_sfm(const SfmArgs& a, int argc, char** argv) {
  gfact::MaskedMatrix obs = gfact::load_observation(
      a.input, a.mask.empty() ? std::nullopt : std::optional<std::string>(a.mask));
  if (obs.rows() % 2 != 0) throw gfact::DimensionError("sfm: input needs 2 rows per frame");

  // Columns of the input expressed as groups of truth columns.
  std::optional<gfact::MergePlan> plan;
  if (!a.plan.empty()) {
    const json pj = gfact::json_io::read_file(a.plan);
    Index original = 0;
    for (const auto& g : pj.at("groups")) original += static_cast<Index>(g.size());
    plan = gfact::json_io::plan_from_json(pj, original);
    if (obs.cols() == original && plan->num_columns() != original) {
      obs = gfact::rearrange(obs, *plan);
    } else if (obs.cols() != plan->num_columns()) {
      throw gfact::DimensionError("sfm: plan does not match the input's column count");
    }
  }

  Matrix completed;
  json fit_info = json::object();
  if (obs.observed_count() == obs.rows() * obs.cols()) {
    completed = obs.values();
  } else {
    const gfact::SolverConfig cfg = a.solver.config();
    const gfact::MultistartFit fit = gfact::multistart_fit(obs, a.solver.algorithm(), cfg, 3);
    print_warnings(fit.fit.warnings);
    completed = fit.fit.completed();
    fit_info = {{"iterations", fit.fit.iterations},
                {"converged", fit.fit.converged},
                {"masked_error", fit.fit.final_error()}};
  }
  const gfact::RigidModel model = gfact::factorize_sfm(completed);
  const std::string ply = a.ply.empty() ? sibling(a.model, ".ply") : a.ply;
  gfact::json_io::write_file(a.model, gfact::json_io::to_json(model));
  gfact::write_ply(ply, model.shape);

  Manifest m("sfm", argc, argv);
  m.solver(a.solver);
  m.j["init"] = "heuristic";
  m.j["inputs"] = {{"observation", a.input}, {"mask", a.mask}, {"plan", a.plan}, {"truth", a.truth}};
  m.j["outputs"] = {{"model", a.model}, {"ply", ply}};
  m.j["completion"] = fit_info;

  if (!a.truth.empty()) {
    const gfact::json_io::Truth t = gfact::json_io::truth_from_json(gfact::json_io::read_file(a.truth));
    gfact::RigidModel truth = t.model;
    const Index n = obs.cols();
    truth.shape.resize(n, 3);
    for (Index c = 0; c < n; ++c) {
      const Index original = plan ? plan->groups[static_cast<size_t>(c)].front() : c;
      if (original >= static_cast<Index>(t.column_point.size())) {
        throw gfact::DimensionError("sfm: truth sidecar has fewer columns than the input");
      }
      truth.shape.row(c) = t.model.shape.row(t.column_point[static_cast<size_t>(original)]);
    }
    if (truth.rotations.rows() != model.rotations.rows()) {
      throw gfact::DimensionError("sfm: truth sidecar has a different frame count");
    }
    const gfact::ErrorReport er = gfact::error_report(model, truth);
    const std::string report = a.report.empty() ? sibling(a.model, ".report.json") : a.report;
    gfact::json_io::write_file(report, gfact::json_io::to_json(er));
    m.j["outputs"]["report"] = report;
    std::printf("shape RMSE %.6g, motion RMSE %.6g%s\n", er.shape_rmse, er.motion_rmse,
                er.mirrored ? " (mirrored)" : "");
  }
  m.write(sibling(a.model, ".manifest.json"));
  std::printf("%td frames, %td points\n", model.num_frames(), model.num_points());
  return kOk;
}

struct BenchArgs {
  std::string suite, out;
  int trials = -1;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

int run_bench(const BenchArgs& a, int argc, char** argv) {
  namespace b = gfact::bench;
  const unsigned threads = a.threads > 0 ? a.threads : b::default_threads();
  static const std::set<std::string> kSuites{"init-sensitivity", "noise-sweep", "detect",
                                              "alpha-sweep",      "iter-cost",   "sfm-gain"};
  if (!kSuites.count(a.suite)) throw gfact::ParameterError("unknown bench suite '" + a.suite + "'");
  const std::string out = a.out.empty() ? a.suite + ".csv" : a.out;
  std::ofstream os(out);
  if (!os) throw gfact::ParameterError("cannot write " + out);
  os.precision(10);

  if (a.suite == "init-sensitivity") {
    b::InitSensitivityOptions o;
    if (a.trials > 0) o.trials = a.trials;
    o.seed = a.seed;
    o.threads = threads;
    b::write_csv(os, b::init_sensitivity(o));
  } else if (a.suite == "noise-sweep") {
    b::NoiseSweepOptions o;
    if (a.trials > 0) o.trials = a.trials;
    o.seed = a.seed;
    o.threads = threads;
    b::write_csv(os, b::noise_sweep(o));
  } else if (a.suite == "detect" || a.suite == "alpha-sweep") {
    b::DetectOptions o;
    if (a.suite == "alpha-sweep") {
      o.trials = 30;
      o.alphas.clear();
      for (int k = 0; k < 12; ++k) o.alphas.push_back(0.25 * std::pow(std::sqrt(2.0), k));
    }
    if (a.trials > 0) o.trials = a.trials;
    o.seed = a.seed;
    o.threads = threads;
    b::write_csv(os, b::detect(o));
  } else if (a.suite == "iter-cost") {
    b::IterCostOptions o;
    o.seed = a.seed;
    b::write_csv(os, b::iter_cost(o));
  } else if (a.suite == "sfm-gain") {
    b::SfmGainOptions o;
    if (a.trials > 0) o.trials = a.trials;
    o.seed = a.seed;
    o.threads = threads;
    b::write_csv(os, b::sfm_gain(o));
  }

  Manifest m("bench", argc, argv);
  m.j["suite"] = a.suite;
  m.j["seed"] = a.seed;
  m.j["trials"] = a.trials;
  m.j["outputs"]["results"] = out;
  m.write(out + ".manifest.json");
  std::cout << "wrote " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank completion, global factorization and rigid reconstruction"};
  app.require_subcommand(1);

  std::string synth_config, synth_out = ".";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", synth_config, "JSON scene config")->required();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();

  CompleteArgs ca;
  auto* complete = app.add_subcommand("complete", "complete a matrix with missing entries");
  complete->add_option("input", ca.input, "observation CSV (NaN = missing)")->required();
  complete->add_option("--mask", ca.mask, "0/1 mask CSV");
  complete->add_option("--init", ca.init)
      ->check(CLI::IsMember({"heuristic", "random", "constant"}))
      ->capture_default_str();
  complete->add_option("--seed", ca.seed, "seed of the random init")->capture_default_str();
  complete->add_option("--out", ca.out, "completed matrix CSV")->capture_default_str();
  complete->add_option("--trace", ca.trace, "per-iteration trace CSV");
  ca.solver.add_to(complete);

  GlobalArgs ga;
  auto* global = app.add_subcommand("global", "detect re-appearing tracks and merge their columns");
  global->add_option("input", ga.input, "observation CSV (NaN = missing)")->required();
  global->add_option("--mask", ga.mask, "0/1 mask CSV");
  global->add_option("--alpha", ga.alpha, "penalty per column")->capture_default_str();
  global->add_option("--proximity", ga.proximity, "only test pairs whose preliminary 3-D points are this close");
  global->add_option("--out", ga.out, "re-arranged observation CSV")->capture_default_str();
  global->add_option("--plan", ga.plan, "merge plan JSON")->capture_default_str();
  global->add_option("--completed", ga.completed, "completed re-arranged matrix CSV");
  ga.solver.add_to(global);

  SfmArgs sa;
  auto* sfm = app.add_subcommand("sfm", "rigid shape and motion from a (re-arranged) observation");
  sfm->add_option("input", sa.input, "observation CSV (NaN = missing)")->required();
  sfm->add_option("--mask", sa.mask, "0/1 mask CSV");
  sfm->add_option("--plan", sa.plan, "merge plan JSON from `global`");
  sfm->add_option("--truth", sa.truth, "truth JSON from `synth`");
  sfm->add_option("--model", sa.model, "model JSON")->capture_default_str();
  sfm->add_option("--ply", sa.ply, "point cloud PLY");
  sfm->add_option("--report", sa.report, "error report JSON");
  sa.solver.add_to(sfm);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "benchmark sweeps written as tidy CSV");
  bench->add_option("suite", ba.suite,
                    "init-sensitivity | noise-sweep | detect | alpha-sweep | iter-cost | sfm-gain")
      ->required();
  bench->add_option("--trials", ba.trials, "trials per point (suite default if omitted)");
  bench->add_option("--seed", ba.seed)->capture_default_str();
  bench->add_option("--out", ba.out, "results CSV (default <suite>.csv)");
  bench->add_option("--threads", ba.threads, "worker threads (default GFACT_THREADS, else the hardware thread count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*synth) return run_synth(synth_config, synth_out, argc, argv);
    if (*complete) return run_complete(ca, argc, argv);
    if (*global) return run_global(ga, argc, argv);
    if (*sfm) return run_sfm(sa, argc, argv);
    if (*bench) return run_bench(ba, argc, argv);
  } catch (const gfact::SingularSystemError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSingular;
  } catch (const gfact::DegenerateConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const gfact::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const gfact::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
