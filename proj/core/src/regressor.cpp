#include "pilot360/regressor.hpp"

#include <cmath>
#include <string>

#include "pilot360/errors.hpp"

namespace pilot360 {

Action naive_action(const ViewingAngle& main_pos, const ViewingAngle& prev) {
  return angular_offset(prev, main_pos);
}

Vec regressor_input(std::span<const double> motion, const Action& naive, const ModelConfig& cfg) {
  if (motion.size() != static_cast<std::size_t>(cfg.dims.k)) {
    throw InvalidInput("regressor_input: motion length " + std::to_string(motion.size()) +
                       " != k=" + std::to_string(cfg.dims.k));
  }
  Vec u(cfg.regressor_input());
  for (std::size_t j = 0; j < motion.size(); ++j) u(static_cast<Eigen::Index>(j)) = motion[j];
  u(cfg.dims.k) = naive.d_azimuth / cfg.action_scale;
  u(cfg.dims.k + 1) = naive.d_elevation / cfg.action_scale;
  return u;
}

RegressorOutput regressor_forward(const PilotModel& model, std::span<const double> motion,
                                  const Action& naive, const RegressorState& state) {
  const ParamStore& p = model.params;
  RegressorOutput out;
  out.state.mu = rnn_cell_forward(regressor_input(motion, naive, model.config), state.mu,
                                  p[model.regressor_cell.w_xh].value,
                                  p[model.regressor_cell.w_hh].value,
                                  p[model.regressor_cell.b].value);
  const Eigen::Vector2d d =
      model.config.action_scale * (p[model.regressor_head].value * out.state.mu);
  out.action = {d(0), d(1)};
  return out;
}

namespace {

void check_pair(std::span<const ViewingAngle> pred, std::span<const ViewingAngle> gt,
                double lambda) {
  if (pred.size() != gt.size()) {
    throw InvalidInput("trajectory_loss: prediction has " + std::to_string(pred.size()) +
                       " frames, ground truth " + std::to_string(gt.size()));
  }
  if (pred.size() < 2) throw InvalidInput("trajectory_loss: need T >= 2");
  if (!(lambda >= 0.0)) throw InvalidInput("trajectory_loss: lambda must be >= 0");
}

Eigen::Vector2d as_vec(const Action& a) { return {a.d_azimuth, a.d_elevation}; }

Eigen::Vector2d unit_or_zero(const Eigen::Vector2d& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector2d(v / n) : Eigen::Vector2d::Zero();
}

}  // namespace

LossBreakdown trajectory_loss(std::span<const ViewingAngle> pred, std::span<const ViewingAngle> gt,
                              double lambda) {
  check_pair(pred, gt, lambda);
  LossBreakdown lb;
  lb.lambda = lambda;
  Eigen::Vector2d v_prev = Eigen::Vector2d::Zero();
  for (std::size_t t = 0; t < pred.size(); ++t) {
    lb.regression += as_vec(angular_offset(gt[t], pred[t])).norm();
    if (t > 0) {
      const Eigen::Vector2d v = as_vec(angular_offset(pred[t - 1], pred[t]));
      lb.smoothness += (v - v_prev).norm();
      v_prev = v;
    }
  }
  lb.total = lb.regression + lambda * lb.smoothness;
  return lb;
}

LossBreakdown trajectory_loss_grad(std::span<const ViewingAngle> pred,
                                   std::span<const ViewingAngle> gt, double lambda,
                                   std::vector<AngleGrad>& grad) {
  const LossBreakdown lb = trajectory_loss(pred, gt, lambda);
  const std::size_t T = pred.size();
  grad.assign(T, AngleGrad{0.0, 0.0});

  std::vector<Eigen::Vector2d> v(T, Eigen::Vector2d::Zero());
  for (std::size_t t = 1; t < T; ++t) v[t] = as_vec(angular_offset(pred[t - 1], pred[t]));
  // u[t] = unit(v_t - v_{t-1}) for t >= 1.
  std::vector<Eigen::Vector2d> u(T, Eigen::Vector2d::Zero());
  for (std::size_t t = 1; t < T; ++t) u[t] = unit_or_zero(v[t] - v[t - 1]);

  for (std::size_t t = 0; t < T; ++t) {
    const Eigen::Vector2d r = unit_or_zero(as_vec(angular_offset(gt[t], pred[t])));
    grad[t][0] += r(0);
    grad[t][1] += r(1);
  }
  for (std::size_t t = 1; t < T; ++t) {
    Eigen::Vector2d gv = u[t];
    if (t + 1 < T) gv -= u[t + 1];
    gv *= lambda;
    // v_t = pred_t - pred_{t-1} (wrap-aware, derivative +-1)
    grad[t][0] += gv(0);
    grad[t][1] += gv(1);
    grad[t - 1][0] -= gv(0);
    grad[t - 1][1] -= gv(1);
  }
  return lb;
}

}  // namespace pilot360
