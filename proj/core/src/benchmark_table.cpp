#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pilot360/errors.hpp"
#include "pilot360/eval.hpp"

namespace pilot360 {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "pilot", "selector_only", "greedy_salient", "center_hold", "offline_dp", "gt_replay"};
  return names;
}

std::vector<NamedMethod> make_methods(std::span<const std::string> names, const PilotModel* model,
                                      const DpConfig& dp) {
  std::vector<NamedMethod> out;
  for (const auto& name : names) {
    const bool needs_model = name == "pilot" || name == "selector_only";
    if (needs_model && model == nullptr) {
      throw InvalidInput("method '" + name + "' needs a model checkpoint");
    }
    if (name == "pilot") {
      out.push_back({name, [model](const Episode& e) { return full_pilot(e, *model); },
                     "online agent: selector + regressor"});
    } else if (name == "selector_only") {
      out.push_back({name, [model](const Episode& e) { return selector_only(e, *model); },
                     "ablation without regressor: emits the selected object's position"});
    } else if (name == "greedy_salient") {
      out.push_back({name, greedy_salient, "highest detection score each frame"});
    } else if (name == "center_hold") {
      out.push_back({name, center_hold, "holds the initial viewing angle"});
    } else if (name == "offline_dp") {
      dp.validate();
      out.push_back({name, [dp](const Episode& e) { return offline_dp(e, dp); },
                     "offline whole-episode DP over a view grid; structural analog, not a "
                     "reimplementation of a published system"});
    } else if (name == "gt_replay") {
      out.push_back({name, [](const Episode& e) { return e.gt; }, "ground-truth replay"});
    } else {
      std::string valid;
      for (const auto& n : method_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw InvalidInput("unknown method '" + name + "'; valid methods: " + valid);
    }
  }
  return out;
}

const BenchmarkRow& BenchmarkTable::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw InvalidInput("benchmark table has no row for '" + method + "'");
}

BenchmarkTable benchmark(std::span<const NamedMethod> methods, std::span<const Episode> episodes,
                         int jobs) {
  if (episodes.empty()) throw InvalidInput("benchmark: empty test set");
  const std::size_t M = methods.size();
  const std::size_t E = episodes.size();
  std::vector<EpisodeScore> scores(M * E);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < M * E; job = next++) {
      const std::size_t m = job / E;
      const std::size_t e = job % E;
      try {
        const std::vector<ViewingAngle> traj = methods[m].run(episodes[e]);
        scores[job] = {methods[m].name, e, mean_overlap(traj, episodes[e].gt),
                       mean_velocity_difference(traj)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(M * E)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkTable table;
  table.per_episode = scores;
  for (std::size_t m = 0; m < M; ++m) {
    BenchmarkRow row{methods[m].name, 0.0, 0.0, E, methods[m].note};
    for (std::size_t e = 0; e < E; ++e) {
      row.mo += scores[m * E + e].mo;
      row.mvd += scores[m * E + e].mvd;
    }
    row.mo /= static_cast<double>(E);
    row.mvd /= static_cast<double>(E);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_json(const BenchmarkTable& table) {
  nlohmann::json j;
  j["units"] = {{"MO", "mean IoU"}, {"MVD", "degrees/frame"}};
  j["methods"] = nlohmann::json::array();
  for (const auto& r : table.rows) {
    j["methods"].push_back(
        {{"method", r.method}, {"MO", r.mo}, {"MVD", r.mvd}, {"episodes", r.episodes},
         {"note", r.note}});
  }
  j["episodes"] = nlohmann::json::array();
  for (const auto& s : table.per_episode) {
    j["episodes"].push_back({{"method", s.method}, {"episode", s.episode}, {"MO", s.mo},
                             {"MVD", s.mvd}});
  }
  return j.dump(2);
}

std::string to_text(const BenchmarkTable& table) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %14s %9s\n", "method", "MO", "MVD(deg/frame)",
                "episodes");
  os << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-16s %8.4f %14.4f %9zu\n", r.method.c_str(), r.mo, r.mvd,
                  r.episodes);
    os << line;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Episode> synth_dataset(const SceneConfig& scene, std::size_t count,
                                   std::uint64_t seed) {
  std::vector<Episode> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(synth_scene(scene, splitmix64(seed * 0x100000001b3ULL + i)));
  }
  return out;
}

std::vector<SweepRow> sensitivity_sweep(const SweepSetup& setup, std::span<const int> n_values,
                                        const std::function<void(int, const EpochMetrics&)>& on_epoch) {
  if (n_values.empty()) throw InvalidInput("sensitivity_sweep: no N values");
  std::vector<SweepRow> rows;
  for (int n : n_values) {
    if (n < 1) throw InvalidInput("sensitivity_sweep: N must be >= 1");
    SceneConfig scene = setup.scene;
    scene.dims.n = n;
    ModelConfig model = setup.model;
    model.dims = scene.dims;
    const auto train_set = synth_dataset(scene, setup.train_episodes, setup.train_seed);
    const auto test_set = synth_dataset(scene, setup.test_episodes, setup.test_seed);

    TrainerState state = make_trainer_state(model, setup.train, setup.init_seed);
    TrainOutputs outputs;
    if (on_epoch) outputs.on_epoch = [&](const EpochMetrics& m) { on_epoch(n, m); };
    train(state, train_set, setup.train, outputs);

    const std::vector<std::string> names = {"pilot"};
    const auto methods = make_methods(names, &state.model);
    const BenchmarkTable table = benchmark(methods, test_set);
    rows.push_back({n, table.rows[0].mo, table.rows[0].mvd});
  }
  return rows;
}

}  // namespace pilot360
