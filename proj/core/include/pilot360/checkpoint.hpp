#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pilot360/diffcore.hpp"
#include "pilot360/model.hpp"

namespace pilot360 {

inline constexpr int kCheckpointFormatVersion = 1;

// Checkpoints are JSON lines. The first record carries the architecture,
// epoch, learning-rate schedule and RNG state; each following record holds
// one ParamTensor as {"name", "rows", "cols", "values"} in row-major order.
struct Checkpoint {
  PilotModel model;
  int epoch = 0;
  LrSchedule schedule;
  std::string rng_state;  // std::mt19937_64 textual state; may be empty
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws ConfigError when `expected` is given and differs from the stored
/// architecture, VersionError on format mismatch, ParseError on bad records.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

/// Stable identifier of a checkpoint file (FNV-1a 64 of its bytes, hex).
std::string checkpoint_id(const std::filesystem::path& path);

/// out_dir/checkpoint-epoch-NNNNNN.jsonl
std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int epoch);

/// Highest-epoch checkpoint in out_dir, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& out_dir);

}  // namespace pilot360
