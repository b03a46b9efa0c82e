#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pilot360/agent.hpp"
#include "pilot360/diffcore.hpp"
#include "pilot360/regressor.hpp"

namespace pilot360 {

/// Default reward cutoff: center-to-corner distance of the default NFoV,
/// rounded to 40.9 degrees.
inline constexpr double kDefaultEta = 40.9;

/// 1 - dist/eta inside the cutoff (inclusive), -1 beyond it.
double reward(const ViewingAngle& pred, const ViewingAngle& gt, double eta = kDefaultEta);

/// Control variate subtracted from the REINFORCE rewards.
///   none:       raw rewards
///   batch_mean: the mean reward of the current batch
///   expected:   per frame, the reward expected under S_t, sum_i S_t(i) r_t(i),
///               with r_t(i) from candidate_reward. It does not depend on the
///               sampled index, so the estimator stays unbiased.
enum class RewardBaseline { none, batch_mean, expected };

std::string to_string(RewardBaseline b);
/// Throws InvalidInput on an unknown name.
RewardBaseline parse_reward_baseline(std::string_view name);

struct TrainConfig {
  int batch_size = 10;
  int max_epochs = 400;
  int seq_len = 50;
  double lambda = 10.0;
  LrSchedule lr;
  int samples = 1;  // Q rollouts per window
  double eta = kDefaultEta;
  std::uint64_t seed = 0;
  RewardBaseline reward_baseline = RewardBaseline::none;
  double grad_clip = 5.0;  // per-network norm bound; <= 0 disables clipping
  double pg_weight = 1.0;  // relative weight of the policy-gradient term
  int checkpoint_every = 10;

  void validate() const;
};

/// Reward of steering towards `candidate` from (l_prev, mu_prev): runs the
/// regressor branch for that candidate without touching any caller state.
double candidate_reward(const PilotModel& model, const FrameObservation& obs,
                        const ViewingAngle& gt, int candidate,
                        const RegressorState& regressor_prev, const ViewingAngle& angle_prev,
                        double eta = kDefaultEta);

// ---------------------------------------------------------------------------
// Window rollouts and their gradients

enum class SelectionMode { sample, greedy, forced };

/// Everything a backward pass over one training window needs.
struct WindowRollout {
  const Episode* episode = nullptr;
  std::size_t begin = 0;
  std::size_t length = 0;
  ViewingAngle init;

  RnnTape selector_tape;
  RnnTape regressor_tape;
  std::vector<Vec> probs;
  std::vector<int> index;
  std::vector<ViewingAngle> angle;  // l_t
  std::vector<bool> elevation_clamped;
  std::vector<double> rewards;
  std::vector<double> frame_baseline;  // empty unless attach_expected_baseline ran

  double baseline_at(std::size_t s) const {
    return frame_baseline.empty() ? 0.0 : frame_baseline[s];
  }

  std::span<const ViewingAngle> gt() const {
    return std::span<const ViewingAngle>(episode->gt).subspan(begin, length);
  }
};

/// Rolls the agent over frames [begin, begin + length) from zero recurrent
/// state and l_0 = gt[begin]. `rng` is required for SelectionMode::sample,
/// `forced` for SelectionMode::forced.
WindowRollout rollout_window(const PilotModel& model, const Episode& episode, std::size_t begin,
                             std::size_t length, SelectionMode mode, double eta,
                             std::mt19937_64* rng = nullptr, std::span<const int> forced = {});

/// Fills `frame_baseline` with sum_i S_t(i) * candidate_reward(i), replaying
/// the recorded regressor states and angles of the rollout.
void attach_expected_baseline(const PilotModel& model, WindowRollout& rollout, double eta);

struct ObjectiveWeights {
  double lambda = 10.0;
  double pg_weight = 1.0;
  double scale = 1.0;     // overall multiplier (1 / frames for a per-frame mean)
  double baseline = 0.0;  // subtracted from every reward, on top of frame_baseline
  bool supervised = true;
  bool reinforce = true;
};

/// Deliberate gradient corruptions used as negative controls.
enum class GradientFault { none, drop_selector_recurrence, drop_angle_feedback };

/// Surrogate objective
///   scale * [ L_sup + pg_weight * sum_t -(r_t - baseline - b_t) log S_t(i_t) ]
/// with indices and rewards held fixed. Its gradient is the supervised
/// gradient plus the negated REINFORCE estimate.
double window_objective(const WindowRollout& rollout, std::span<const double> rewards,
                        const ObjectiveWeights& weights);

/// Accumulates the exact gradient of window_objective (rewards taken from the
/// rollout) into the model's grads. Returns the objective value.
double accumulate_window_gradients(PilotModel& model, const WindowRollout& rollout,
                                   const ObjectiveWeights& weights,
                                   GradientFault fault = GradientFault::none);

// ---------------------------------------------------------------------------
// Steps, epochs and runs

struct TrainWindow {
  const Episode* episode;
  std::size_t begin;
  std::size_t length;
};

/// Cuts every episode into consecutive windows of at most seq_len frames,
/// dropping tails shorter than two frames.
std::vector<TrainWindow> make_windows(std::span<const Episode> episodes, int seq_len);

struct StepDiagnostics {
  LossBreakdown loss;  // mean over rollouts of the per-window sums
  double mean_reward = 0.0;
  double grad_norm = 0.0;
};

/// One hybrid update over a batch of windows. Raises NumericsError (model
/// unchanged) when the loss or any gradient is not finite.
StepDiagnostics train_step(PilotModel& model, std::span<const TrainWindow> batch,
                           const TrainConfig& config, double lr, std::mt19937_64& rng);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double regression = 0.0;
  double smoothness = 0.0;
  double total = 0.0;
  double mean_reward = 0.0;
};

/// Resumable training state: parameters, completed epochs and RNG.
struct TrainerState {
  PilotModel model;
  int epoch = 0;
  std::mt19937_64 rng;
};

/// Runs one epoch: seeded window shuffle, batches of batch_size, one
/// train_step per batch. Advances state.epoch.
EpochMetrics run_epoch(TrainerState& state, std::span<const TrainWindow> windows,
                       const TrainConfig& config);

struct TrainOutputs {
  std::filesystem::path out_dir;  // empty = keep everything in memory
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Trains until state.epoch == config.max_epochs. Writes checkpoints (the
/// starting one, every checkpoint_every epochs and the final one) and appends
/// one metrics record per epoch to out_dir/metrics.jsonl.
std::vector<EpochMetrics> train(TrainerState& state, std::span<const Episode> dataset,
                                const TrainConfig& config, const TrainOutputs& outputs = {});

/// Fresh state: fan-in initialized model and an RNG seeded from config.seed.
TrainerState make_trainer_state(const ModelConfig& model, const TrainConfig& config,
                                std::uint64_t init_seed);

struct Checkpoint;

/// Model, epoch and RNG stream restored from a checkpoint, so that training
/// continues exactly as if it had never stopped.
TrainerState resume_trainer_state(const Checkpoint& checkpoint);

}  // namespace pilot360
