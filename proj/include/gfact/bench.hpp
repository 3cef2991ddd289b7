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

// Benchmark suites and the reference scenes they run on. Every trial draws
// from its own seed, so results do not depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gfact/completion.hpp"
#include "gfact/global_factorization.hpp"
#include "gfact/init.hpp"
#include "gfact/matrix_core.hpp"
#include "gfact/sfm.hpp"
#include "gfact/synth.hpp"

namespace gfact::bench {

/// Thread count from GFACT_THREADS, else the hardware concurrency.
inline unsigned default_threads() {
  if (const char* env = std::getenv("GFACT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(0..n-1) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
template <class Fn>
void parallel_for(Index n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(n, 1))));
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// splitmix64 of (base, trial): decorrelated per-trial seeds.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) {
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + trial + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Reference scenes

/// 60 x 55 random-box scene: 40 points over 30 frames, 15 of them interrupted.
inline SceneSpec detection_scene(double sigma, std::uint64_t seed) {
  SceneSpec s;
  s.shape = ShapeKind::kRandomBox;
  s.num_points = 40;
  s.num_frames = 30;
  s.noise_std = sigma;
  s.sweep_deg = 540.0;
  s.axis = Eigen::Vector3d(0.5, 1.0, 0.0);
  s.tilt_deg = 15.0;
  s.drift = 8.0;
  s.min_visible = 17;
  s.max_visible = 30;
  s.num_interrupted = 15;
  s.gap_min = 3;
  s.gap_max = 7;
  s.min_period = 8;
  s.min_per_frame = 8;
  s.seed = seed;
  return s;
}

/// 100 x 372 cylinder scene. With split_limit > 0 that many re-appearing
/// points are stored as two columns each.
inline SceneSpec cylinder_scene(double sigma, std::uint64_t seed, Index split_limit = 0) {
  SceneSpec s;
  s.shape = ShapeKind::kCylinder;
  s.num_points = 372;
  s.cylinder_rings = 12;
  s.num_frames = 50;
  s.noise_std = sigma;
  s.sweep_deg = 360.0;
  s.axis = Eigen::Vector3d::UnitY();
  s.tilt_deg = 15.0;
  s.visible_arc_deg = 263.5;
  s.split_reappearances = split_limit != 0;
  s.split_limit = split_limit;
  s.seed = seed;
  return s;
}

/// The 2 x 2 example: truth [[-1, -1.95], [2, 3.9]] with w22 missing.
inline MaskedMatrix golden_2x2() {
  Matrix v(2, 2);
  v << -1.0, -1.95, 2.0, 0.0;
  Matrix m(2, 2);
  m << 1.0, 1.0, 1.0, 0.0;
  return MaskedMatrix(v, m);
}

// ---------------------------------------------------------------------------
// Detection scoring

struct DetectionCount {
  Index true_pairs = 0;   // re-appearing points
  Index detected = 0;     // of those, all columns in one group
  Index accepted = 0;     // accepted merges
  Index wrong = 0;        // accepted merges joining different points
};

/// Scores the accepted prefix of `steps` whose error increase is below
/// `alpha` (the greedy path does not depend on alpha, only its stopping point).
inline DetectionCount score_merges(const Scene& scene, const std::vector<MergeStep>& steps,
                                   double run_alpha, double alpha) {
  const Index n = static_cast<Index>(scene.column_point.size());
  std::vector<Index> parent(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
  const auto find = [&](Index x) {
    while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)];
    return x;
  };
  DetectionCount c;
  for (const MergeStep& st : steps) {
    const double delta = st.cost_after - st.cost_before + run_alpha;
    if (!st.accepted || !(delta < alpha)) break;
    ++c.accepted;
    const Index p = scene.column_point[static_cast<size_t>(st.group_i.front())];
    bool same = true;
    for (Index col : st.group_i) same &= scene.column_point[static_cast<size_t>(col)] == p;
    for (Index col : st.group_j) same &= scene.column_point[static_cast<size_t>(col)] == p;
    if (!same) ++c.wrong;
    parent[static_cast<size_t>(find(st.group_j.front()))] = find(st.group_i.front());
  }
  for (const auto& g : scene.true_plan.groups) {
    if (g.size() < 2) continue;
    ++c.true_pairs;
    bool joined = true;
    for (Index col : g) joined &= find(col) == find(g.front());
    if (joined) ++c.detected;
  }
  return c;
}

// ---------------------------------------------------------------------------
// init-sensitivity: convergence percentage against initial-guess magnitude.

struct InitSensitivityOptions {
  Index size = 24;
  Index rank = 4;
  double missing_rate = 0.7;
  double noise_rel = 0.1;  // noise std relative to the truth's entry mean
  int max_iter = 100;
  int trials = 100;
  std::vector<double> truth_scales{1e-3, 1.0, 1e3};
  std::vector<double> magnitudes{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct InitSensitivityRow {
  double truth_scale;
  double magnitude;
  std::string algorithm;
  int trials;
  int converged;
  int singular;  // RC runs stopped by a singular system
  double percent;  // converged / (trials - singular)
};

/// A trial converges when its masked RMS error ends below the noise std.
inline std::vector<InitSensitivityRow> init_sensitivity(const InitSensitivityOptions& o) {
  std::vector<InitSensitivityRow> out;
  for (double scale : o.truth_scales) {
    for (double mag : o.magnitudes) {
      std::vector<int> em_ok(static_cast<size_t>(o.trials)), rc_ok(em_ok.size()), rc_sing(em_ok.size());
      parallel_for(o.trials, o.threads, [&](Index t) {
        std::mt19937_64 rng(trial_seed(o.seed, static_cast<std::uint64_t>(t)));
        const Matrix truth = low_rank_matrix(o.size, o.size, o.rank, scale, rng);
        Matrix mask;
        MaskSpec ms;
        ms.pattern = MaskPattern::kRandom;
        ms.rows = ms.cols = o.size;
        ms.rate = o.missing_rate;
        do {
          ms.seed = rng();
          mask = gen_mask(ms);
        } while (mask.rowwise().sum().minCoeff() < static_cast<double>(o.rank) ||
                 mask.colwise().sum().minCoeff() < static_cast<double>(o.rank));
        const double sigma = o.noise_rel * scale;
        std::normal_distribution<double> noise(0.0, sigma);
        Matrix w = truth;
        for (Index k = 0; k < w.size(); ++k) w(k) += noise(rng);
        const MaskedMatrix obs(w, mask);
        const double observed_mean = (w.array() * mask.array()).sum() / mask.sum();
        std::uniform_real_distribution<double> guess(0.0, 2.0 * mag * observed_mean);
        Matrix init = obs.values();
        for (Index k = 0; k < init.size(); ++k) {
          if (mask(k) == 0.0) init(k) = guess(rng);
        }
        const double threshold = sigma * std::sqrt(mask.sum());
        const SolverConfig cfg{o.rank, o.max_iter, 1e-12, 0.0, false};
        em_ok[static_cast<size_t>(t)] = em_complete(obs, init, cfg).final_error() < threshold;
        try {
          rc_ok[static_cast<size_t>(t)] = rc_complete(obs, init, cfg).final_error() < threshold;
        } catch (const SingularSystemError&) {
          rc_sing[static_cast<size_t>(t)] = 1;
        }
      });
      const auto sum = [](const std::vector<int>& v) {
        int s = 0;
        for (int x : v) s += x;
        return s;
      };
      const int em = sum(em_ok), rc = sum(rc_ok), sing = sum(rc_sing);
      out.push_back({scale, mag, "em", o.trials, em, 0, 100.0 * em / o.trials});
      const int usable = o.trials - sing;
      out.push_back({scale, mag, "rc", o.trials, rc, sing, usable > 0 ? 100.0 * rc / usable : 0.0});
    }
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<InitSensitivityRow>& rows) {
  os << "truth_scale,magnitude,algorithm,trials,converged,singular,percent\n";
  for (const auto& r : rows) {
    os << r.truth_scale << ',' << r.magnitude << ',' << r.algorithm << ',' << r.trials << ','
       << r.converged << ',' << r.singular << ',' << r.percent << '\n';
  }
}

// ---------------------------------------------------------------------------
// noise-sweep: error after a fixed number of iterations against noise std.

struct NoiseSweepOptions {
  Index size = 24;
  Index rank = 4;
  double known_fraction = 0.3;  // banded visibility
  Index edge_cols = 4;
  int iterations = 20;
  int reference_iterations = 20000;
  int trials = 3;
  std::vector<double> sigmas{std::pow(10.0, -2.5), 0.01, std::pow(10.0, -1.5), 0.1,
                             std::pow(10.0, -0.5), 1.0, std::pow(10.0, 0.5), 10.0,
                             std::pow(10.0, 1.5), 100.0, std::pow(10.0, 2.5)};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct NoiseSweepRow {
  double sigma;
  int trial;
  std::string algorithm;
  // RMS over observed entries of (estimate - long-run RC fit of the same data).
  double error_vs_optimal;
  // RMS over all entries of (estimate - noiseless truth).
  double error_vs_truth;
  double masked_error;
};

inline std::vector<NoiseSweepRow> noise_sweep(const NoiseSweepOptions& o) {
  MaskSpec ms;
  ms.pattern = MaskPattern::kBanded;
  ms.rows = ms.cols = o.size;
  ms.known_fraction = o.known_fraction;
  ms.edge_cols = o.edge_cols;
  const Matrix mask = gen_mask(ms);
  const double n_obs = mask.sum();
  const Index cases = static_cast<Index>(o.sigmas.size()) * o.trials;
  std::vector<std::vector<NoiseSweepRow>> per(static_cast<size_t>(cases));
  parallel_for(cases, o.threads, [&](Index c) {
    const double sigma = o.sigmas[static_cast<size_t>(c / o.trials)];
    const int trial = static_cast<int>(c % o.trials);
    std::mt19937_64 rng(trial_seed(o.seed, static_cast<std::uint64_t>(trial)));
    const Matrix truth = low_rank_matrix(o.size, o.size, o.rank, 1.0, rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    Matrix w = truth;
    for (Index k = 0; k < w.size(); ++k) w(k) += sigma * noise(rng);
    const MaskedMatrix obs(w, mask);
    const InitResult init = heuristic_init(obs, o.rank);
    const SolverConfig fixed{o.rank, o.iterations, 1e-300, 0.0, false};
    const SolverConfig longrun{o.rank, o.reference_iterations, 1e-15, 0.0, false};
    const Matrix ref = rc_complete(obs, init.guess, longrun).completed();
    for (Algorithm algo : {Algorithm::kEm, Algorithm::kRc}) {
      const CompletionResult r = complete(algo, obs, init.guess, fixed);
      const Matrix est = r.completed();
      NoiseSweepRow row;
      row.sigma = sigma;
      row.trial = trial;
      row.algorithm = algo == Algorithm::kEm ? "em" : "rc";
      row.error_vs_optimal = ((est - ref).array() * mask.array()).matrix().norm() / std::sqrt(n_obs);
      row.error_vs_truth = (est - truth).norm() / std::sqrt(static_cast<double>(est.size()));
      row.masked_error = r.final_error();
      per[static_cast<size_t>(c)].push_back(row);
    }
  });
  std::vector<NoiseSweepRow> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<NoiseSweepRow>& rows) {
  os << "sigma,trial,algorithm,error_vs_optimal,error_vs_truth,masked_error\n";
  for (const auto& r : rows) {
    os << r.sigma << ',' << r.trial << ',' << r.algorithm << ',' << r.error_vs_optimal << ','
       << r.error_vs_truth << ',' << r.masked_error << '\n';
  }
}

// ---------------------------------------------------------------------------
// detect / alpha-sweep: re-appearance detection on the random-box scene.

struct DetectOptions {
  std::vector<double> sigmas{1.0, 3.0, 5.0, 7.0};
  std::vector<double> alphas{kDefaultAlpha};
  int trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct DetectRow {
  double sigma;
  double alpha;
  int trials;
  // Pooled over trials: detected / true re-appearances, wrong / accepted merges.
  double detection;
  double false_alarm;
  Index true_pairs;
  Index detected;
  Index accepted;
  Index wrong;
  double known_w;    // mean known fraction of W
  double known_wr;   // of the true W_R
  double seconds_per_trial;
};

/// One greedy run per trial at the largest alpha; smaller alphas are scored on
/// the prefix of the same merge path.
inline std::vector<DetectRow> detect(const DetectOptions& o) {
  if (o.alphas.empty()) throw ParameterError("detect: no alpha values");
  const double run_alpha = *std::max_element(o.alphas.begin(), o.alphas.end());
  std::vector<DetectRow> out;
  for (double sigma : o.sigmas) {
    std::vector<std::vector<DetectionCount>> counts(static_cast<size_t>(o.trials));
    std::vector<double> known_w(counts.size()), known_wr(counts.size()), secs(counts.size());
    parallel_for(o.trials, o.threads, [&](Index t) {
      const Scene scene = gen_scene(detection_scene(sigma, trial_seed(o.seed, static_cast<std::uint64_t>(t))));
      known_w[static_cast<size_t>(t)] = scene.obs.known_fraction();
      known_wr[static_cast<size_t>(t)] = rearrange(scene.obs, scene.true_plan).known_fraction();
      GlobalConfig cfg;
      cfg.alpha = run_alpha;
      const auto t0 = std::chrono::steady_clock::now();
      const GlobalResult res = global_rearrange(scene.obs, cfg);
      secs[static_cast<size_t>(t)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (double a : o.alphas) {
        counts[static_cast<size_t>(t)].push_back(score_merges(scene, res.per_step_costs, run_alpha, a));
      }
    });
    for (size_t ai = 0; ai < o.alphas.size(); ++ai) {
      DetectRow row{sigma, o.alphas[ai], o.trials, 0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (int t = 0; t < o.trials; ++t) {
        const DetectionCount& c = counts[static_cast<size_t>(t)][ai];
        row.true_pairs += c.true_pairs;
        row.detected += c.detected;
        row.accepted += c.accepted;
        row.wrong += c.wrong;
        row.known_w += known_w[static_cast<size_t>(t)] / o.trials;
        row.known_wr += known_wr[static_cast<size_t>(t)] / o.trials;
        row.seconds_per_trial += secs[static_cast<size_t>(t)] / o.trials;
      }
      row.detection = row.true_pairs ? static_cast<double>(row.detected) / static_cast<double>(row.true_pairs) : 1.0;
      row.false_alarm = row.accepted ? static_cast<double>(row.wrong) / static_cast<double>(row.accepted) : 0.0;
      out.push_back(row);
    }
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<DetectRow>& rows) {
  os << "sigma,alpha,trials,detection,false_alarm,true_pairs,detected,accepted,wrong,known_w,"
        "known_wr,seconds_per_trial\n";
  for (const auto& r : rows) {
    os << r.sigma << ',' << r.alpha << ',' << r.trials << ',' << r.detection << ','
       << r.false_alarm << ',' << r.true_pairs << ',' << r.detected << ',' << r.accepted << ','
       << r.wrong << ',' << r.known_w << ',' << r.known_wr << ',' << r.seconds_per_trial << '\n';
  }
}

// ---------------------------------------------------------------------------
// iter-cost: wall time per iteration against problem size.

struct IterCostOptions {
  std::vector<Index> sizes{20, 40, 80, 160};
  Index rank = 4;
  double missing_rate = 0.5;
  int iterations = 10;
  std::uint64_t seed = 1;
};

struct IterCostRow {
  Index size;
  std::string algorithm;
  double seconds_per_iteration;
};

inline std::vector<IterCostRow> iter_cost(const IterCostOptions& o) {
  std::vector<IterCostRow> out;
  for (Index n : o.sizes) {
    std::mt19937_64 rng(trial_seed(o.seed, static_cast<std::uint64_t>(n)));
    const Matrix truth = low_rank_matrix(n, n, o.rank, 1.0, rng);
    MaskSpec ms;
    ms.pattern = MaskPattern::kRandom;
    ms.rows = ms.cols = n;
    ms.rate = o.missing_rate;
    ms.seed = rng();
    const MaskedMatrix obs(truth, gen_mask(ms));
    const Matrix init = obs.filled(Matrix::Constant(n, n, truth.mean()));
    const SolverConfig cfg{o.rank, o.iterations, 1e-300, 0.0, true};
    for (Algorithm algo : {Algorithm::kEm, Algorithm::kRc}) {
      const auto t0 = std::chrono::steady_clock::now();
      const CompletionResult r = complete(algo, obs, init, cfg);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.push_back({n, algo == Algorithm::kEm ? "em" : "rc", s / std::max(1, r.iterations)});
    }
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<IterCostRow>& rows) {
  os << "size,algorithm,seconds_per_iteration\n";
  for (const auto& r : rows) os << r.size << ',' << r.algorithm << ',' << r.seconds_per_iteration << '\n';
}

// ---------------------------------------------------------------------------
// sfm-gain: 3-D errors from W (unmerged) and from the global W_R.

struct SfmGainOptions {
  double sigma = 3.0;
  int trials = 20;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct SfmGainRow {
  int trial;
  double shape_w, motion_w;
  double shape_wr, motion_wr;
  bool ok;  // false when either factorization was degenerate
};

inline std::vector<SfmGainRow> sfm_gain(const SfmGainOptions& o) {
  std::vector<SfmGainRow> out(static_cast<size_t>(o.trials));
  parallel_for(o.trials, o.threads, [&](Index t) {
    SfmGainRow row{static_cast<int>(t), 0, 0, 0, 0, false};
    const Scene scene = gen_scene(detection_scene(o.sigma, trial_seed(o.seed, static_cast<std::uint64_t>(t))));
    const GlobalConfig cfg;
    try {
      const GlobalResult res = global_rearrange(scene.obs, cfg);
      const MultistartFit unmerged =
          multistart_fit(scene.obs, cfg.algorithm, cfg.final_fit, cfg.init_starts);
      const ErrorReport ew =
          error_report(factorize_sfm(unmerged.fit.completed()), scene.truth_per_column());
      RigidModel truth_wr = scene.truth;
      truth_wr.shape.resize(res.plan.num_columns(), 3);
      for (Index g = 0; g < res.plan.num_columns(); ++g) {
        const Index p = scene.column_point[static_cast<size_t>(res.plan.groups[static_cast<size_t>(g)].front())];
        truth_wr.shape.row(g) = scene.truth.shape.row(p);
      }
      const ErrorReport er = error_report(factorize_sfm(res.fit.completed()), truth_wr);
      row = {static_cast<int>(t), ew.shape_rmse, ew.motion_rmse, er.shape_rmse, er.motion_rmse, true};
    } catch (const DegenerateConfigurationError&) {
    }
    out[static_cast<size_t>(t)] = row;
  });
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<SfmGainRow>& rows) {
  os << "trial,ok,shape_w,motion_w,shape_wr,motion_wr\n";
  for (const auto& r : rows) {
    os << r.trial << ',' << r.ok << ',' << r.shape_w << ',' << r.motion_w << ',' << r.shape_wr
       << ',' << r.motion_wr << '\n';
  }
}

}  // namespace gfact::bench
