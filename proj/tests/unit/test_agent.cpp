#include "pilot360/agent.hpp"

#include <gtest/gtest.h>

#include <random>

#include "pilot360/errors.hpp"
#include "test_support.hpp"

namespace pilot360 {
namespace {

// Randomizes every frame of `ep` from `from` onwards, keeping dims valid.
void scramble_after(Episode& ep, std::size_t from, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1), az(0, 360), el(-60, 60);
  for (std::size_t t = from; t < ep.length(); ++t) {
    std::vector<ObjectObservation> objs = ep.frames[t].objects;
    for (auto& o : objs) {
      for (auto& a : o.appearance) a = u(rng);
      for (auto& m : o.motion) m = u(rng);
      o.position = {az(rng), el(rng)};
      o.score = u(rng);
    }
    ep.frames[t] = make_frame_observation(objs, ep.dims);
  }
}

TEST(PilotStep, Deterministic) {
  const Episode ep = synth_scene(testing::small_scene(4), 2);
  const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), 5);
  const AgentState s = AgentState::initial(model.config, {30, 5});
  const StepResult a = pilot_step(model, ep.frames[0], s);
  const StepResult b = pilot_step(model, ep.frames[0], s);
  EXPECT_EQ(a.angle, b.angle);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.state.selector.h, b.state.selector.h);
  EXPECT_EQ(a.state.regressor.mu, b.state.regressor.mu);
}

TEST(PilotStep, ForcedIndexOutOfRange) {
  const Episode ep = synth_scene(testing::small_scene(4), 2);
  const PilotModel model(testing::small_model(ep.dims));
  StepOverrides ov;
  ov.forced_index = 4;
  EXPECT_THROW(pilot_step(model, ep.frames[0], AgentState::initial(model.config, {}), ov),
               InvalidInput);
}

TEST(PilotStep, CausalUnderFutureMutation) {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Episode ep = synth_scene(testing::small_scene(16), seed);
    const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), seed + 50);
    const PilotResult ref = pilot_episode(model, ep, initial_angle(ep));
    const std::size_t t = seed % ep.length();
    Episode mutated = ep;
    scramble_after(mutated, t + 1, rng);
    const PilotResult got = pilot_episode(model, mutated, initial_angle(ep));
    for (std::size_t s = 0; s <= t; ++s) {
      EXPECT_EQ(got.trajectory[s], ref.trajectory[s]) << "seed " << seed << " frame " << s;
      EXPECT_EQ(got.selected[s], ref.selected[s]);
    }
  }
}

TEST(PilotEpisode, SingleFrame) {
  Episode ep = synth_scene(testing::small_scene(3), 0);
  ep.frames.resize(1);
  ep.gt.resize(1);
  ep.gt_object_index.resize(1);
  const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), 1);
  const PilotResult r = pilot_episode(model, ep, initial_angle(ep));
  EXPECT_EQ(r.trajectory.size(), 1u);
  EXPECT_EQ(r.selected.size(), 1u);
}

TEST(PilotEpisode, ZeroWeightsHoldTheInitialAngle) {
  const Episode ep = synth_scene(testing::small_scene(20), 3);
  const PilotModel model(testing::small_model(ep.dims));
  const PilotResult r = pilot_episode(model, ep, {100, 20});
  for (const auto& l : r.trajectory) EXPECT_EQ(l, (ViewingAngle{100, 20}));
}

TEST(PilotEpisode, OracleSelectionWithBypassTracksTheMainObject) {
  const Episode ep = synth_scene(testing::small_scene(40), 8);
  const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), 2);
  PilotOptions opt;
  opt.forced_indices = ep.gt_object_index;
  opt.bypass_regressor = true;
  const PilotResult r = pilot_episode(model, ep, initial_angle(ep), opt);
  for (std::size_t t = 0; t < ep.length(); ++t) {
    const auto slot = static_cast<std::size_t>(ep.gt_object_index[t]);
    EXPECT_EQ(r.trajectory[t], ep.frames[t].objects[slot].position);
    EXPECT_EQ(r.selected[t], ep.gt_object_index[t]);
  }
}

TEST(PilotEpisode, MatchesManualStreaming) {
  const Episode ep = synth_scene(testing::small_scene(25), 4);
  const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), 9);
  const PilotResult batch = pilot_episode(model, ep, initial_angle(ep));
  AgentState s = AgentState::initial(model.config, initial_angle(ep));
  for (std::size_t t = 0; t < ep.length(); ++t) {
    const StepResult step = pilot_step(model, ep.frames[t], s);
    EXPECT_EQ(step.angle, batch.trajectory[t]);
    s = step.state;
  }
}

TEST(PilotEpisode, DimsMismatch) {
  const Episode ep = synth_scene(testing::small_scene(5, 3, 4), 0);
  const PilotModel model(testing::small_model({6, 12, 5}));
  EXPECT_THROW(pilot_episode(model, ep, {}), InvalidInput);
}

TEST(Trajectory, FileRoundTrip) {
  testing::TempDir dir("traj");
  const Episode ep = synth_scene(testing::small_scene(12), 6);
  const PilotModel model = PilotModel::initialized(testing::small_model(ep.dims), 1);
  const PilotResult r = pilot_episode(model, ep, initial_angle(ep));
  {
    TrajectoryWriter w(dir / "t.jsonl", "abc123", r.trajectory.size());
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) w.write(t, r.trajectory[t], r.selected[t]);
    w.close();
  }
  const TrajectoryFile tf = load_trajectory(dir / "t.jsonl");
  EXPECT_EQ(tf.checkpoint_id, "abc123");
  EXPECT_EQ(tf.result.trajectory, r.trajectory);
  EXPECT_EQ(tf.result.selected, r.selected);
}

}  // namespace
}  // namespace pilot360
