#include <benchmark/benchmark.h>

#include <random>

#include "pilot360/agent.hpp"
#include "pilot360/eval.hpp"
#include "pilot360/training.hpp"

namespace {

using namespace pilot360;

SceneConfig reference_scene(int n) {
  SceneConfig s;
  s.dims = {16, 12, n};
  s.frames = 200;
  s.objects = 4;
  return s;
}

ModelConfig reference_model(const ObservationDims& dims) {
  ModelConfig m;
  m.dims = dims;
  m.selector_hidden = 32;
  m.regressor_hidden = 8;
  return m;
}

// One online decision: selector, greedy choice, regressor, angle update.
void BM_PilotStep(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Episode ep = synth_scene(reference_scene(n), 1);
  const PilotModel model = PilotModel::initialized(reference_model(ep.dims), 3);
  AgentState s = AgentState::initial(model.config, initial_angle(ep));
  std::size_t t = 0;
  for (auto _ : state) {
    StepResult r = pilot_step(model, ep.frames[t], s);
    benchmark::DoNotOptimize(r.angle);
    s = std::move(r.state);
    t = (t + 1) % ep.length();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PilotStep)->Arg(8)->Arg(16)->Arg(32);

// One hybrid update over a batch of ten 50-frame windows.
void BM_TrainStep(benchmark::State& state) {
  const auto episodes = synth_dataset(reference_scene(8), 3, 1);
  PilotModel model = PilotModel::initialized(reference_model(episodes[0].dims), 3);
  const auto windows = make_windows(episodes, 50);
  const std::vector<TrainWindow> batch(windows.begin(), windows.begin() + 10);
  TrainConfig cfg;
  cfg.lambda = 1.0;
  cfg.pg_weight = 300.0;
  cfg.reward_baseline = RewardBaseline::expected;
  std::mt19937_64 rng(0);
  for (auto _ : state) {
    const StepDiagnostics d = train_step(model, batch, cfg, 0.0, rng);
    benchmark::DoNotOptimize(d.mean_reward);
  }
  state.SetItemsProcessed(state.iterations() * 500);  // frames
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_NfovIou(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> az(0, 360), el(-60, 60);
  std::vector<NFoV> views(1024);
  for (auto& v : views) v = NFoV{{az(rng), el(rng)}};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nfov_iou(views[i % 1024], views[(i * 7 + 3) % 1024]));
    ++i;
  }
}
BENCHMARK(BM_NfovIou);

// Whole-episode DP over the default 30-degree view grid.
void BM_OfflineDp(benchmark::State& state) {
  SceneConfig scene = reference_scene(8);
  scene.frames = static_cast<int>(state.range(0));
  const Episode ep = synth_scene(scene, 4);
  for (auto _ : state) {
    auto path = offline_dp(ep);
    benchmark::DoNotOptimize(path.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OfflineDp)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
