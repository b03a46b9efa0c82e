#pragma once

#include <array>
#include <span>
#include <vector>

#include "pilot360/geometry.hpp"
#include "pilot360/model.hpp"

namespace pilot360 {

struct RegressorState {
  Vec mu;

  static RegressorState zero(const ModelConfig& cfg) {
    return {Vec::Zero(cfg.regressor_hidden)};
  }
};

struct LossBreakdown {
  double regression = 0.0;  // sum_t |l_t - l_t^gt|
  double smoothness = 0.0;  // sum_t |v_t - v_{t-1}|
  double total = 0.0;       // regression + lambda * smoothness
  double lambda = 10.0;
};

/// Follow-the-object action: the wrap-aware offset from the previous viewing
/// angle to the main object's position.
Action naive_action(const ViewingAngle& main_pos, const ViewingAngle& prev);

/// con_V(m, naive / action_scale).
Vec regressor_input(std::span<const double> motion, const Action& naive, const ModelConfig& cfg);

struct RegressorOutput {
  RegressorState state;
  Action action;
};

/// mu_t = RNN_R(con_V(m, naive), mu_{t-1}); Delta_t = W_R mu_t (times the
/// action scale).
RegressorOutput regressor_forward(const PilotModel& model, std::span<const double> motion,
                                  const Action& naive, const RegressorState& state);

/// Regression plus lambda-weighted smoothness with v_t = offset(l_{t-1}, l_t)
/// and v_1 = (0, 0). Throws InvalidInput on length mismatch, T < 2 or
/// lambda < 0.
LossBreakdown trajectory_loss(std::span<const ViewingAngle> pred,
                              std::span<const ViewingAngle> gt, double lambda);

using AngleGrad = std::array<double, 2>;  // d/d(azimuth), d/d(elevation)

/// trajectory_loss plus its gradient with respect to every predicted angle.
/// Norms use the zero subgradient at the origin.
LossBreakdown trajectory_loss_grad(std::span<const ViewingAngle> pred,
                                   std::span<const ViewingAngle> gt, double lambda,
                                   std::vector<AngleGrad>& grad);

}  // namespace pilot360
