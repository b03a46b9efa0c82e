// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pilot360/agent.hpp"
#include "pilot360/checkpoint.hpp"
#include "pilot360/episode_io.hpp"
#include "pilot360/eval.hpp"
#include "pilot360/gradcheck.hpp"
#include "pilot360/run_config.hpp"
#include "pilot360/selector.hpp"
#include "pilot360/training.hpp"

namespace fs = std::filesystem;
using namespace pilot360;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Reward

Outcome reward_fidelity() {
  const double self = reward({123, 10}, {123, 10});
  const double far = reward({0, 0}, {50, 0});
  const double mid = reward({0, 0}, {20.45, 0});
  const double corner = std::hypot(32.75, 24.56);
  const bool ok = self == 1.0 && far == -1.0 && std::abs(mid - 0.5) <= 1e-9 &&
                  std::abs(kDefaultEta - corner) <= 0.05 &&
                  std::abs(nfov_corner_distance() - kDefaultEta) <= 0.05;
  return {ok, fmt("r(l,l)=%g r(50)=%g r(20.45)=%.12f eta=%g corner=%.4f", self, far, mid,
                  kDefaultEta, corner)};
}

// ---------------------------------------------------------------------------
// 2. Gradients

Outcome gradient_correctness() {
  const GradCheckSetup setup;  // d=8, k=12, N=4, H_s=16, H_r=8, T=10
  std::string detail;
  bool ok = true;
  for (auto target : {GradCheckTarget::selector, GradCheckTarget::regressor,
                      GradCheckTarget::joint, GradCheckTarget::trajectory_loss}) {
    double worst = 0.0;
    std::string worst_name;
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const GradCheckReport r = run_gradient_check(target, setup, seed);
      if (!r.passed) ++failures;
      if (const ParamCheck* w = r.worst(); w && w->max_rel_error > worst) {
        worst = w->max_rel_error;
        worst_name = w->name;
      }
    }
    ok = ok && failures == 0;
    detail += fmt("%s max %.2e (%s)%s; ", std::string(to_string(target)).c_str(), worst,
                  worst_name.c_str(), failures ? fmt(" %d seeds failed", failures).c_str() : "");
  }
  return {ok, detail + "tolerance 1e-4, 10 seeds"};
}

// ---------------------------------------------------------------------------
// 3. Policy gradient

Outcome policy_gradient_unbiased() {
  Vec logits(3), rewards(3);
  logits << 0.4, -0.3, 0.1;
  rewards << 0.9, -1.0, 0.2;
  const SelectionDistribution dist{softmax(logits)};
  Vec exact = Vec::Zero(3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    exact += dist.probs(i) * rewards(i) * log_softmax_grad(dist.probs, i);
  }
  const int draws = 10000;
  std::mt19937_64 rng(2024);
  Vec sum = Vec::Zero(3), sum_sq = Vec::Zero(3);
  for (int q = 0; q < draws; ++q) {
    const int i = select_sample(dist, rng);
    const int idx[] = {i};
    const double r[] = {rewards(i)};
    const Vec g = policy_gradient_contribution(dist, idx, r);
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const Vec mean = sum / draws;
  bool ok = true;
  double worst_z = 0.0;
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double var = (sum_sq(j) / draws - mean(j) * mean(j)) * draws / (draws - 1.0);
    const double se = std::sqrt(var / draws);
    const double z = std::abs(mean(j) - exact(j)) / se;
    worst_z = std::max(worst_z, z);
    ok = ok && z <= 3.0;
  }
  return {ok, fmt("N=3, %d samples, worst |mean-exact| = %.2f standard errors", draws, worst_z)};
}

// ---------------------------------------------------------------------------
// 4. DP optimality

Outcome dp_optimality() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1, 1), az(0, 360), el(-80, 80), w(0, 0.1);
  std::uniform_int_distribution<int> frames(1, 5), cells(1, 6);
  int mismatches = 0;
  const double unit = 30.0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto T = static_cast<std::size_t>(frames(rng));
    const auto C = static_cast<std::size_t>(cells(rng));
    std::vector<ViewingAngle> grid(C);
    for (auto& c : grid) c = {az(rng), el(rng)};
    std::vector<std::vector<double>> unary(T, std::vector<double>(C));
    for (auto& row : unary) for (auto& x : row) x = u(rng);
    const double weight = w(rng);

    // Brute force over all C^T paths, accumulating in the same order the
    // recursion does so that the optimum compares exactly.
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_path, path(T);
    std::size_t total = 1;
    for (std::size_t t = 0; t < T; ++t) total *= C;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t t = T; t-- > 0;) {
        path[t] = static_cast<int>(c % C);
        c /= C;
      }
      double v = unary[0][static_cast<std::size_t>(path[0])];
      for (std::size_t t = 1; t < T; ++t) {
        const auto a = static_cast<std::size_t>(path[t - 1]), b = static_cast<std::size_t>(path[t]);
        v = v - weight * (angular_distance(grid[a], grid[b]) / unit);
        v = v + unary[t][b];
      }
      if (v > best) {
        best = v;
        best_path = path;
      }
    }
    const DpSolution dp = dp_solve(unary, grid, weight, unit);
    if (dp.objective != best || dp.path != best_path) ++mismatches;
  }
  return {mismatches == 0, fmt("200 instances (T<=5, cells<=6), %d mismatches", mismatches)};
}

// ---------------------------------------------------------------------------
// 5 and 6. Learning on the reference suite

RunConfig reference_config() {
  return load_run_config(PILOT360_SOURCE_DIR "/configs/reference.json");
}

Outcome learning_works() {
  const RunConfig cfg = reference_config();
  const auto start = std::chrono::steady_clock::now();
  const auto train_set = synth_dataset(cfg.scene, cfg.train_episodes, cfg.train_data_seed);
  const auto test_set = synth_dataset(cfg.scene, cfg.test_episodes, cfg.test_data_seed);
  TrainerState state = make_trainer_state(cfg.model, cfg.train, cfg.init_seed);
  const auto history = train(state, train_set, cfg.train);
  const BenchmarkTable table =
      benchmark(make_methods(cfg.eval_methods, &state.model, cfg.dp), test_set, cfg.jobs);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::cout << to_text(table);
  std::cout << fmt("  mean reward: first epoch %.4f, last epoch %.4f\n",
                   history.front().mean_reward, history.back().mean_reward);

  const BenchmarkRow& pilot = table.row("pilot");
  const BenchmarkRow& sel = table.row("selector_only");
  const bool a = pilot.mo >= table.row("center_hold").mo + 0.2;
  const bool b = pilot.mo >= table.row("greedy_salient").mo;
  const bool c = pilot.mvd < sel.mvd && std::abs(pilot.mo - sel.mo) <= 0.05;
  const bool fast = secs <= 600.0;
  return {a && b && c && fast,
          fmt("(a)%s (b)%s (c)%s; pilot MO %.4f MVD %.4f, selector_only MO %.4f MVD %.4f; %.1fs",
              a ? "ok" : "NO", b ? "ok" : "NO", c ? "ok" : "NO", pilot.mo, pilot.mvd, sel.mo,
              sel.mvd, secs)};
}

Outcome sensitivity() {
  const RunConfig cfg = reference_config();
  SweepSetup setup;
  setup.scene = cfg.scene;
  setup.train_episodes = cfg.train_episodes;
  setup.test_episodes = cfg.test_episodes;
  setup.train_seed = cfg.train_data_seed;
  setup.test_seed = cfg.test_data_seed;
  setup.model = cfg.model;
  setup.train = cfg.train;
  setup.init_seed = cfg.init_seed;
  const auto start = std::chrono::steady_clock::now();
  const auto rows = sensitivity_sweep(setup, cfg.sweep_n);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double lo = 1.0, hi = 0.0;
  std::string detail;
  for (const auto& r : rows) {
    lo = std::min(lo, r.mo);
    hi = std::max(hi, r.mo);
    detail += fmt("N=%d MO %.4f; ", r.n, r.mo);
  }
  return {hi - lo <= 0.1 && secs <= 1800.0, detail + fmt("spread %.4f; %.1fs", hi - lo, secs)};
}

// ---------------------------------------------------------------------------
// 7. Metric identities

Outcome metric_identities() {
  std::mt19937_64 rng(7);
  // Elevation stays clear of the poles, where clamping would bend the path.
  std::uniform_real_distribution<double> az(0, 360), el(-30, 30), vel(-20, 20), vel_el(-0.9, 0.9);
  std::uniform_int_distribution<int> len(3, 60);
  int mo_bad = 0, mvd_bad = 0, wrapped = 0;
  double worst_mvd = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int T = len(rng);
    const double a0 = az(rng), e0 = el(rng), va = vel(rng), ve = vel_el(rng);
    std::vector<ViewingAngle> linear, random;
    bool crossed = false;
    for (int t = 0; t < T; ++t) {
      const double raw = a0 + va * t;
      crossed = crossed || raw >= 360.0 || raw < 0.0;
      linear.push_back(ViewingAngle::make(raw, e0 + ve * t));
      random.push_back({az(rng), el(rng)});
    }
    wrapped += crossed;
    if (mean_overlap(random, random) != 1.0 || mean_overlap(linear, linear) != 1.0) ++mo_bad;
    const double m = mean_velocity_difference(linear);
    worst_mvd = std::max(worst_mvd, m);
    if (m > 1e-9) ++mvd_bad;
  }
  return {mo_bad == 0 && mvd_bad == 0,
          fmt("1000 trajectories (%d cross the seam): MO!=1 in %d, MVD>1e-9 in %d (max %.1e)",
              wrapped, mo_bad, mvd_bad, worst_mvd)};
}

// ---------------------------------------------------------------------------
// 8. Causality and streaming

void scramble_after(Episode& ep, std::size_t from, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1), az(0, 360), el(-60, 60);
  for (std::size_t t = from; t < ep.length(); ++t) {
    std::vector<ObjectObservation> objs = ep.frames[t].objects;
    for (auto& o : objs) {
      for (auto& a : o.appearance) a = u(rng) * 4 - 2;
      for (auto& m : o.motion) m = u(rng);
      o.position = {az(rng), el(rng)};
      o.score = u(rng);
    }
    ep.frames[t] = make_frame_observation(objs, ep.dims);
  }
}

// Peak RSS of a child is inherited from whatever it was forked from, so the
// pilot command must not be forked from this (large) process directly. The
// measurement runs in a fresh image of this binary, which forks the CLI and
// reports the child's ru_maxrss on stdout.
int measure_rss_main(int argc, char** argv) {
  std::vector<char*> args(argv, argv + argc);
  args.push_back(nullptr);
  const pid_t pid = fork();
  if (pid == 0) {
    if (std::freopen("/dev/null", "w", stdout) == nullptr) _exit(127);
    execv(args[0], args.data());
    _exit(127);
  }
  int status = 0;
  struct rusage usage {};
  if (wait4(pid, &status, 0, &usage) != pid) return 1;
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return 1;
  std::printf("%ld\n", usage.ru_maxrss);
  return 0;
}

// Peak resident set size of the CLI run with `args`, in KiB; -1 on failure.
long cli_peak_rss_kib(const std::vector<std::string>& args) {
  std::string cmd = "'" + fs::read_symlink("/proc/self/exe").string() +
                    "' --measure-rss '" PILOT360_CLI_PATH "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return -1;
  long kib = -1;
  if (std::fscanf(pipe, "%ld", &kib) != 1) kib = -1;
  return pclose(pipe) == 0 ? kib : -1;
}

Outcome causality_and_streaming() {
  // Bit-identical prefixes under future mutation.
  SceneConfig scene;
  scene.dims = {8, 12, 6};
  scene.frames = 40;
  scene.objects = 4;
  ModelConfig mc;
  mc.dims = scene.dims;
  mc.selector_hidden = 16;
  mc.regressor_hidden = 8;
  std::mt19937_64 rng(8);
  int broken = 0;
  for (std::uint64_t e = 0; e < 100; ++e) {
    const Episode ep = synth_scene(scene, 1000 + e);
    const PilotModel model = PilotModel::initialized(mc, e);
    const auto t = static_cast<std::size_t>(rng() % ep.length());
    Episode mutated = ep;
    scramble_after(mutated, t + 1, rng);
    const PilotResult a = pilot_episode(model, ep, initial_angle(ep));
    const PilotResult b = pilot_episode(model, mutated, initial_angle(ep));
    for (std::size_t s = 0; s <= t; ++s) {
      if (!(a.trajectory[s] == b.trajectory[s]) || a.selected[s] != b.selected[s]) {
        ++broken;
        break;
      }
    }
  }

  // Peak memory of the pilot command at two episode lengths.
  const fs::path dir = fs::temp_directory_path() / fmt("pilot360-accept-%d", getpid());
  fs::create_directories(dir);
  SceneConfig small = scene;
  small.dims = {4, 4, 4};
  small.objects = 3;
  ModelConfig smc = mc;
  smc.dims = small.dims;
  save_checkpoint({PilotModel::initialized(smc, 1), 0, {}, ""}, dir / "ckpt.jsonl");
  long rss[2] = {0, 0};
  const int lengths[2] = {1000, 10000};
  for (int i = 0; i < 2; ++i) {
    small.frames = lengths[i];
    const fs::path file = dir / fmt("ep%d.jsonl", lengths[i]);
    const std::vector<Episode> eps = {synth_scene(small, 5)};
    save_episodes(eps, file);
    rss[i] = cli_peak_rss_kib({"pilot", "--checkpoint", (dir / "ckpt.jsonl").string(),
                                 "--episodes", file.string(), "-o",
                                 (dir / fmt("traj%d.jsonl", lengths[i])).string()});
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  // Flat: ten times the frames may not cost more than 2 MiB of extra peak RSS.
  const bool flat = rss[0] > 0 && rss[1] > 0 && rss[1] - rss[0] <= 2048;
  return {broken == 0 && flat,
          fmt("100 episodes, %d causality violations; pilot peak RSS %ld KiB at T=1000, "
              "%ld KiB at T=10000",
              broken, rss[0], rss[1])};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2 && std::string(argv[1]) == "--measure-rss") return measure_rss_main(argc - 2, argv + 2);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "reward fidelity", reward_fidelity},
      {2, "gradient correctness", gradient_correctness},
      {3, "policy-gradient unbiasedness", policy_gradient_unbiased},
      {4, "DP baseline optimality", dp_optimality},
      {5, "learning works", learning_works},
      {6, "sensitivity to N", sensitivity},
      {7, "metric identities", metric_identities},
      {8, "causality and streaming", causality_and_streaming},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << " [" << fmt("%.1fs", secs) << "]" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
