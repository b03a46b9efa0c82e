#pragma once

#include <cstdint>

#include "pilot360/diffcore.hpp"
#include "pilot360/observation.hpp"

namespace pilot360 {

/// Architecture of the selector + regressor pair.
struct ModelConfig {
  ObservationDims dims;
  int selector_hidden = 256;
  int regressor_hidden = 8;
  // Object positions enter the selector divided by this (degrees).
  double position_scale = 180.0;
  // The naive action enters the regressor divided by this, and the regressed
  // action leaves it multiplied by this (degrees).
  double action_scale = 30.0;

  int selector_input() const { return dims.flat_size(); }
  int regressor_input() const { return dims.k + 2; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All trainable weights: RNN_S, the softmax head W_s, RNN_R and the
/// regression head W_R.
struct PilotModel {
  ModelConfig config;
  ParamStore params;

  RnnCellIds selector_cell{};
  std::size_t selector_head = 0;  // W_s: n x selector_hidden
  RnnCellIds regressor_cell{};
  std::size_t regressor_head = 0;  // W_R: 2 x regressor_hidden

  /// Zero-initialized model.
  explicit PilotModel(const ModelConfig& cfg);

  /// Fan-in uniform initialization.
  static PilotModel initialized(const ModelConfig& cfg, std::uint64_t seed);
};

}  // namespace pilot360
