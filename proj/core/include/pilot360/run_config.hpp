#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pilot360/eval.hpp"
#include "pilot360/model.hpp"
#include "pilot360/observation.hpp"
#include "pilot360/training.hpp"

namespace pilot360 {

/// One declarative record for a whole experiment. Every field has a default;
/// parsing rejects unknown keys.
struct RunConfig {
  SceneConfig scene;
  ModelConfig model;  // model.dims mirrors scene.dims
  TrainConfig train;
  DpConfig dp;

  std::size_t train_episodes = 50;
  std::size_t test_episodes = 10;
  std::uint64_t train_data_seed = 1;
  std::uint64_t test_data_seed = 2;
  std::uint64_t init_seed = 3;

  std::vector<std::string> eval_methods = method_names();
  int jobs = 1;
  std::vector<int> sweep_n = {8, 16, 32};
  std::string out_dir = "runs/default";

  void validate() const;
};

/// Parses JSON text. Throws ConfigError with the offending key path.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);

}  // namespace pilot360
