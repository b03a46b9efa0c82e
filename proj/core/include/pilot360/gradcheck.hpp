#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pilot360/diffcore.hpp"
#include "pilot360/model.hpp"
#include "pilot360/training.hpp"

namespace pilot360 {

enum class GradCheckTarget { selector, regressor, joint, trajectory_loss };

std::string_view to_string(GradCheckTarget target);

/// Problem size for the finite-difference checks.
struct GradCheckSetup {
  ModelConfig model{{8, 12, 4}, 16, 8, 180.0, 30.0};
  int frames = 10;
  int objects = 3;
  double lambda = 10.0;
  double eta = kDefaultEta;
};

/// Builds a random model and episode from `seed`, freezes a rollout (sampled
/// selections and their rewards) and compares the analytic gradient of the
/// target's objective against central finite differences. Only parameters of
/// the target are reported (all of them for `joint`, the predicted angles for
/// `trajectory_loss`).
GradCheckReport run_gradient_check(GradCheckTarget target, const GradCheckSetup& setup,
                                   std::uint64_t seed, const GradCheckOptions& options = {},
                                   GradientFault fault = GradientFault::none);

}  // namespace pilot360
