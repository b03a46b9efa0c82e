#include "pilot360/regressor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pilot360/errors.hpp"
#include "test_support.hpp"

namespace pilot360 {
namespace {

TEST(NaiveAction, AlreadyThere) {
  EXPECT_EQ(naive_action({42, 7}, {42, 7}), (Action{0, 0}));
}

TEST(NaiveAction, WrapAwareOffset) {
  EXPECT_EQ(naive_action({10, 5}, {350, 0}), (Action{20, 5}));
}

TEST(RegressorForward, ZeroWeightsGiveZeroAction) {
  const PilotModel model(testing::small_model({6, 12, 4}));
  const std::vector<double> motion(12, 0.7);
  const RegressorOutput out =
      regressor_forward(model, motion, {25, -10}, RegressorState::zero(model.config));
  EXPECT_EQ(out.action, (Action{0, 0}));
}

TEST(RegressorForward, Deterministic) {
  const PilotModel model = PilotModel::initialized(testing::small_model({6, 12, 4}), 4);
  const std::vector<double> motion(12, 0.1);
  const RegressorState s{Vec::Constant(4, -0.2)};
  const RegressorOutput a = regressor_forward(model, motion, {3, 1}, s);
  const RegressorOutput b = regressor_forward(model, motion, {3, 1}, s);
  EXPECT_EQ(a.action, b.action);
  EXPECT_EQ(a.state.mu, b.state.mu);
}

TEST(RegressorForward, HandSetSingleUnit) {
  ModelConfig cfg = testing::small_model({1, 2, 1}, 2, 1);
  cfg.action_scale = 1.0;
  PilotModel model(cfg);
  model.params[model.regressor_cell.b].value(0) = std::atanh(0.5);
  model.params[model.regressor_head].value << 10.0, 0.0;
  const std::vector<double> motion = {0.3, -0.8};
  const RegressorOutput out =
      regressor_forward(model, motion, {7, -2}, RegressorState::zero(cfg));
  EXPECT_NEAR(out.action.d_azimuth, 5.0, 1e-12);
  EXPECT_EQ(out.action.d_elevation, 0.0);
}

TEST(RegressorForward, DimensionMismatch) {
  const PilotModel model(testing::small_model({6, 12, 4}));
  const std::vector<double> motion(11, 0.0);
  EXPECT_THROW(regressor_forward(model, motion, {0, 0}, RegressorState::zero(model.config)),
               InvalidInput);
}

TEST(RegressorInput, ScalesNaiveAction) {
  ModelConfig cfg = testing::small_model({1, 2, 1});
  const std::vector<double> motion = {1.0, 2.0};
  const Vec u = regressor_input(motion, {15, -30}, cfg);
  ASSERT_EQ(u.size(), 4);
  EXPECT_EQ(u(0), 1.0);
  EXPECT_EQ(u(1), 2.0);
  EXPECT_DOUBLE_EQ(u(2), 0.5);
  EXPECT_DOUBLE_EQ(u(3), -1.0);
}

// ---------------------------------------------------------------------------

TEST(TrajectoryLoss, PerfectStaticFit) {
  const std::vector<ViewingAngle> t(6, ViewingAngle{123, 4});
  const LossBreakdown lb = trajectory_loss(t, t, 10.0);
  EXPECT_EQ(lb.total, 0.0);
}

TEST(TrajectoryLoss, ConstantVelocityPaysOnlyTheStart) {
  const std::vector<ViewingAngle> t = {{0, 0}, {1, 0}, {2, 0}};
  const LossBreakdown lb = trajectory_loss(t, t, 10.0);
  EXPECT_EQ(lb.regression, 0.0);
  EXPECT_DOUBLE_EQ(lb.smoothness, 1.0);
  EXPECT_DOUBLE_EQ(lb.total, 10.0);
}

TEST(TrajectoryLoss, ConstantOffset) {
  const std::vector<ViewingAngle> pred(4, ViewingAngle{13, 0});
  const std::vector<ViewingAngle> gt(4, ViewingAngle{10, 0});
  const LossBreakdown lb = trajectory_loss(pred, gt, 10.0);
  EXPECT_DOUBLE_EQ(lb.regression, 12.0);
  EXPECT_EQ(lb.smoothness, 0.0);
  EXPECT_DOUBLE_EQ(lb.total, 12.0);
}

TEST(TrajectoryLoss, OffsetAcrossWrap) {
  const std::vector<ViewingAngle> pred(3, ViewingAngle{1, 0});
  const std::vector<ViewingAngle> gt(3, ViewingAngle{359, 0});
  EXPECT_NEAR(trajectory_loss(pred, gt, 1.0).regression, 6.0, 1e-12);
}

TEST(TrajectoryLoss, Errors) {
  const std::vector<ViewingAngle> a(3), b(4), one(1);
  EXPECT_THROW(trajectory_loss(a, b, 1.0), InvalidInput);
  EXPECT_THROW(trajectory_loss(one, one, 1.0), InvalidInput);
  EXPECT_THROW(trajectory_loss(a, a, -1.0), InvalidInput);
}

TEST(TrajectoryLossGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> az(100, 200), el(-30, 30), jit(-4, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ViewingAngle> pred(7), gt(7);
    for (std::size_t t = 0; t < 7; ++t) {
      gt[t] = {az(rng), el(rng)};
      pred[t] = {gt[t].azimuth + jit(rng), gt[t].elevation + jit(rng)};
    }
    std::vector<AngleGrad> grad;
    const LossBreakdown lb = trajectory_loss_grad(pred, gt, 3.0, grad);
    EXPECT_DOUBLE_EQ(lb.total, trajectory_loss(pred, gt, 3.0).total);
    ASSERT_EQ(grad.size(), 7u);
    const double h = 1e-6;
    for (std::size_t t = 0; t < 7; ++t) {
      for (int axis = 0; axis < 2; ++axis) {
        auto plus = pred, minus = pred;
        (axis == 0 ? plus[t].azimuth : plus[t].elevation) += h;
        (axis == 0 ? minus[t].azimuth : minus[t].elevation) -= h;
        const double num =
            (trajectory_loss(plus, gt, 3.0).total - trajectory_loss(minus, gt, 3.0).total) / (2 * h);
        EXPECT_NEAR(grad[t][static_cast<std::size_t>(axis)], num, 1e-5)
            << "trial " << trial << " t " << t << " axis " << axis;
      }
    }
  }
}

}  // namespace
}  // namespace pilot360
