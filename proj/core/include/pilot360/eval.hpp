#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pilot360/agent.hpp"
#include "pilot360/geometry.hpp"
#include "pilot360/observation.hpp"
#include "pilot360/training.hpp"

namespace pilot360 {

// ---------------------------------------------------------------------------
// Metrics

/// Mean per-frame IoU of default-span NFoVs. Throws InvalidInput on length
/// mismatch or empty input.
double mean_overlap(std::span<const ViewingAngle> pred, std::span<const ViewingAngle> gt);

/// Mean over t = 3..T of |v_t - v_{t-1}| in degrees per frame, with
/// v_t = offset(l_{t-1}, l_t). Throws InvalidInput when T < 3.
double mean_velocity_difference(std::span<const ViewingAngle> pred);

// ---------------------------------------------------------------------------
// Baselines

std::vector<ViewingAngle> center_hold(const Episode& episode);
std::vector<ViewingAngle> greedy_salient(const Episode& episode);
std::vector<ViewingAngle> selector_only(const Episode& episode, const PilotModel& model);
std::vector<ViewingAngle> full_pilot(const Episode& episode, const PilotModel& model);

struct DpConfig {
  double cell_deg = 30.0;
  // Penalty per grid cell of view movement between consecutive frames.
  double smooth_weight = 1.0;
  double eta = kDefaultEta;

  void validate() const;
};

/// Cell centers of a regular azimuth x elevation grid.
std::vector<ViewingAngle> view_grid(double cell_deg);

struct DpSolution {
  std::vector<int> path;
  double objective = 0.0;
};

/// Maximizes sum_t unary[t][c_t] - w * dist(c_{t-1}, c_t) / cell_unit over
/// cell paths by dynamic programming. Ties go to the lowest cell index.
DpSolution dp_solve(const std::vector<std::vector<double>>& unary,
                    std::span<const ViewingAngle> cells, double smooth_weight,
                    double cell_unit = 1.0);

/// Unary term: score-weighted reward of a view against its nearest detected
/// (score > 0) object.
std::vector<std::vector<double>> dp_unary(const Episode& episode,
                                          std::span<const ViewingAngle> cells, double eta);

/// Whole-episode DP over the view grid. Offline: reads every frame first.
std::vector<ViewingAngle> offline_dp(const Episode& episode, const DpConfig& config = {});

// ---------------------------------------------------------------------------
// Benchmark tables

using TrajectoryMethod = std::function<std::vector<ViewingAngle>(const Episode&)>;

struct NamedMethod {
  std::string name;
  TrajectoryMethod run;
  std::string note;
};

/// Valid names for make_methods().
const std::vector<std::string>& method_names();

/// Builds the named methods. Model-backed methods need `model`. Throws
/// InvalidInput listing the valid names for an unknown name.
std::vector<NamedMethod> make_methods(std::span<const std::string> names,
                                      const PilotModel* model, const DpConfig& dp = {});

struct BenchmarkRow {
  std::string method;
  double mo = 0.0;
  double mvd = 0.0;  // degrees per frame
  std::size_t episodes = 0;
  std::string note;
};

struct EpisodeScore {
  std::string method;
  std::size_t episode = 0;
  double mo = 0.0;
  double mvd = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  std::vector<EpisodeScore> per_episode;

  const BenchmarkRow& row(const std::string& method) const;
};

/// Runs every method on every episode (`jobs` worker threads) and averages
/// MO and MVD per method.
BenchmarkTable benchmark(std::span<const NamedMethod> methods, std::span<const Episode> episodes,
                         int jobs = 1);

/// Machine-readable form: {"units": ..., "methods": [...], "episodes": [...]}.
std::string to_json(const BenchmarkTable& table);
/// Fixed-width text table for terminals.
std::string to_text(const BenchmarkTable& table);

// ---------------------------------------------------------------------------
// Sensitivity to the number of candidate objects

/// Deterministic list of episodes; episode i uses a seed derived from (seed, i).
std::vector<Episode> synth_dataset(const SceneConfig& scene, std::size_t count,
                                   std::uint64_t seed);

struct SweepSetup {
  SceneConfig scene;
  std::size_t train_episodes = 50;
  std::size_t test_episodes = 10;
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  ModelConfig model;
  TrainConfig train;
  std::uint64_t init_seed = 3;
};

struct SweepRow {
  int n = 0;
  double mo = 0.0;
  double mvd = 0.0;
};

/// Trains and evaluates one agent per candidate count on the same scenes.
std::vector<SweepRow> sensitivity_sweep(const SweepSetup& setup, std::span<const int> n_values,
                                        const std::function<void(int, const EpochMetrics&)>&
                                            on_epoch = {});

}  // namespace pilot360
