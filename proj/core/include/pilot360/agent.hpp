#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilot360/observation.hpp"
#include "pilot360/regressor.hpp"
#include "pilot360/selector.hpp"

namespace pilot360 {

struct AgentState {
  SelectorState selector;
  RegressorState regressor;
  ViewingAngle angle;  // l_{t-1}

  static AgentState initial(const ModelConfig& cfg, const ViewingAngle& init) {
    return {SelectorState::zero(cfg), RegressorState::zero(cfg), init};
  }
};

/// Test and ablation hooks for a single step.
struct StepOverrides {
  // Use this slot instead of the selector's greedy choice.
  std::optional<int> forced_index;
  // Emit the main object's position directly (the naive policy).
  bool bypass_regressor = false;
};

struct StepResult {
  ViewingAngle angle;
  int index = 0;
  AgentState state;
};

/// selector -> greedy choice -> naive action -> regressor -> angle update.
/// Depends only on `obs` and `state`.
StepResult pilot_step(const PilotModel& model, const FrameObservation& obs,
                      const AgentState& state, const StepOverrides& overrides = {});

struct PilotResult {
  std::vector<ViewingAngle> trajectory;
  std::vector<int> selected;
};

struct PilotOptions {
  // Per-frame forced slots (empty = use the selector).
  std::span<const int> forced_indices;
  bool bypass_regressor = false;
};

/// Folds pilot_step over every frame starting from zero recurrent state.
PilotResult pilot_episode(const PilotModel& model, const Episode& episode,
                          const ViewingAngle& init, const PilotOptions& options = {});

/// l_0 used for training and evaluation: the first ground-truth angle.
inline ViewingAngle initial_angle(const Episode& episode) { return episode.gt.front(); }

// Trajectory files: a JSON header line
//   {"format_version": 1, "checkpoint": "<id>", "frames": T}
// followed by one {"frame", "azimuth", "elevation", "selected"} record per line.
inline constexpr int kTrajectoryFormatVersion = 1;

class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::filesystem::path& path, const std::string& checkpoint_id,
                   std::optional<std::size_t> frames = std::nullopt);
  void write(std::size_t frame, const ViewingAngle& angle, int selected);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct TrajectoryFile {
  std::string checkpoint_id;
  PilotResult result;
};

TrajectoryFile load_trajectory(const std::filesystem::path& path);

}  // namespace pilot360
