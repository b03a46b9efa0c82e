#include "pilot360/diffcore.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pilot360/errors.hpp"

namespace pilot360 {
namespace {

TEST(RnnCell, ZeroWeightsGiveZeroState) {
  const Vec h = rnn_cell_forward(Vec::Ones(3), Vec::Ones(2), Mat::Zero(2, 3), Mat::Zero(2, 2),
                                 Mat::Zero(2, 1));
  EXPECT_EQ(h, Vec::Zero(2));
}

TEST(RnnCell, ScalarTanh) {
  Vec x(1);
  x << 0.5;
  const Vec h = rnn_cell_forward(x, Vec::Zero(1), Mat::Ones(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1));
  EXPECT_NEAR(h(0), 0.46211716, 1e-8);
}

TEST(RnnCell, OutputStrictlyInsideUnitInterval) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    Mat w_xh = Mat::NullaryExpr(5, 4, [&] { return n(rng); });
    Mat w_hh = Mat::NullaryExpr(5, 5, [&] { return n(rng); });
    Mat b = Mat::NullaryExpr(5, 1, [&] { return n(rng); });
    Vec x = Vec::NullaryExpr(4, [&] { return n(rng); });
    const Vec h = rnn_cell_forward(x, Vec::Zero(5), w_xh, w_hh, b);
    EXPECT_LE(h.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(RnnCell, ShapeMismatchThrows) {
  EXPECT_THROW(rnn_cell_forward(Vec::Zero(2), Vec::Zero(2), Mat::Zero(2, 3), Mat::Zero(2, 2),
                                Mat::Zero(2, 1)),
               InvalidInput);
  EXPECT_THROW(rnn_cell_forward(Vec::Zero(3), Vec::Zero(1), Mat::Zero(2, 3), Mat::Zero(2, 2),
                                Mat::Zero(2, 1)),
               InvalidInput);
}

TEST(Softmax, UniformForEqualLogits) {
  const Vec p = softmax(Vec::Zero(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p(i), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariant) {
  Vec z(4);
  z << 0.3, -1.2, 2.5, 0.0;
  const Vec p = softmax(z);
  for (double c : {-100.0, 7.5, 1e3}) {
    const Vec q = softmax((z.array() + c).matrix());
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Vec z(2);
  z << 1000.0, 0.0;
  const Vec p = softmax(z);
  EXPECT_NEAR(p(0), 1.0, 1e-12);
  EXPECT_NEAR(p(1), 0.0, 1e-12);
  EXPECT_TRUE(p.allFinite());
}

TEST(LogSoftmaxGrad, MatchesFiniteDifferences) {
  Vec z(4);
  z << 0.2, -0.7, 1.1, 0.4;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Vec g = log_softmax_grad(softmax(z), i);
    for (Eigen::Index j = 0; j < 4; ++j) {
      Vec zp = z, zm = z;
      zp(j) += 1e-6;
      zm(j) -= 1e-6;
      const double num = (std::log(softmax(zp)(i)) - std::log(softmax(zm)(i))) / 2e-6;
      EXPECT_NEAR(g(j), num, 1e-8);
    }
  }
}

// ---------------------------------------------------------------------------

struct TinyRnn {
  ParamStore store;
  RnnCellIds ids{};
  std::size_t head = 0;

  TinyRnn(int in, int hidden, std::uint64_t seed) {
    ids.w_xh = store.add("w_xh", hidden, in);
    ids.w_hh = store.add("w_hh", hidden, hidden);
    ids.b = store.add("b", hidden, 1);
    head = store.add("head", 1, hidden);
    std::mt19937_64 rng(seed);
    store.init_uniform_fan_in(rng);
  }

  // loss = sum_t head * h_t, optionally filling grads through the tape.
  double run(const std::vector<Vec>& xs, bool with_grad) {
    RnnTape tape;
    const Eigen::Index H = store[ids.w_hh].value.rows();
    Vec h = Vec::Zero(H);
    double loss = 0.0;
    for (const auto& x : xs) {
      const Vec next = rnn_cell_forward(x, h, store[ids.w_xh].value, store[ids.w_hh].value,
                                        store[ids.b].value);
      tape.record(x, h, next);
      h = next;
      loss += (store[head].value * h)(0);
    }
    if (with_grad) {
      store.zero_grad();
      std::vector<Vec> dh(xs.size(), store[head].value.transpose());
      for (std::size_t t = 0; t < xs.size(); ++t) {
        store[head].grad += tape.hidden(t).transpose();
      }
      tape.backward(dh, store, ids);
    }
    return loss;
  }
};

TEST(Bptt, ZeroUpstreamGivesZeroGrads) {
  TinyRnn net(3, 4, 2);
  RnnTape tape;
  Vec h = Vec::Zero(4);
  for (int t = 0; t < 5; ++t) {
    const Vec x = Vec::Constant(3, 0.1 * t);
    const Vec next = rnn_cell_forward(x, h, net.store[net.ids.w_xh].value,
                                      net.store[net.ids.w_hh].value, net.store[net.ids.b].value);
    tape.record(x, h, next);
    h = next;
  }
  std::vector<Vec> dh(5, Vec::Zero(4));
  net.store.zero_grad();
  tape.backward(dh, net.store, net.ids);
  EXPECT_EQ(net.store.grad_norm(), 0.0);
}

TEST(Bptt, BackwardWithoutForwardIsStateError) {
  TinyRnn net(2, 2, 1);
  RnnTape tape;
  std::vector<Vec> dh;
  EXPECT_THROW(tape.backward(dh, net.store, net.ids), StateError);
  EXPECT_THROW(tape.backward_step(0, Vec::Zero(2), net.store, net.ids), StateError);
}

TEST(Bptt, RandomNetworksMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TinyRnn net(3, 5, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> n;
    std::vector<Vec> xs(8);
    for (auto& x : xs) x = Vec::NullaryExpr(3, [&] { return n(rng); });
    const GradCheckReport r =
        gradient_check(net.store, [&](bool g) { return net.run(xs, g); }, {});
    EXPECT_TRUE(r.passed) << "seed " << seed << " worst " << r.worst()->name << " "
                          << r.worst()->max_rel_error;
    EXPECT_LT(r.worst()->max_rel_error, 1e-4);
  }
}

TEST(GradientCheck, LinearLayerGradientIsInput) {
  ParamStore store;
  store.add("w", 1, 3);
  store[0].value << 0.5, -1.0, 2.0;
  Vec x(3);
  x << 1.5, -2.0, 0.25;
  auto objective = [&](bool with_grad) {
    if (with_grad) store[0].grad = x.transpose();
    return (store[0].value * x)(0);
  };
  const GradCheckReport r = gradient_check(store, objective, {});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(store[0].grad, Mat(x.transpose()));
}

TEST(GradientCheck, CorruptedGradientFails) {
  TinyRnn net(2, 3, 4);
  std::vector<Vec> xs(4, Vec::Ones(2));
  auto corrupted = [&](bool g) {
    const double v = net.run(xs, g);
    if (g) net.store.at("w_hh").grad *= 0.5;
    return v;
  };
  const GradCheckReport r = gradient_check(net.store, corrupted, {});
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst()->name, "w_hh");
}

TEST(GradientCheck, EmptyStorePassesVacuously) {
  ParamStore store;
  const GradCheckReport r = gradient_check(store, [](bool) { return 1.0; }, {});
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.params.empty());
}

TEST(GradientCheck, NonFiniteLossIsNumericsError) {
  ParamStore store;
  store.add("w", 1, 1);
  EXPECT_THROW(gradient_check(store, [](bool) { return std::nan(""); }, {}), NumericsError);
}

TEST(GradientCheck, TinyToleranceExposesFloatNoise) {
  TinyRnn net(3, 4, 9);
  std::vector<Vec> xs(6, Vec::Constant(3, 0.3));
  GradCheckOptions opts;
  opts.tolerance = 1e-12;
  EXPECT_FALSE(gradient_check(net.store, [&](bool g) { return net.run(xs, g); }, opts).passed);
}

// ---------------------------------------------------------------------------

TEST(Sgd, ZeroGradientIsFixedPoint) {
  ParamStore s;
  s.add("w", 2, 2);
  s[0].value << 1, 2, 3, 4;
  const Mat before = s[0].value;
  sgd_step(s, 0.5);
  EXPECT_EQ(s[0].value, before);
}

TEST(Sgd, Arithmetic) {
  ParamStore s;
  s.add("p", 1, 1);
  s[0].value(0) = 1.0;
  s[0].grad(0) = 2.0;
  sgd_step(s, 0.1);
  EXPECT_DOUBLE_EQ(s[0].value(0), 0.8);
  EXPECT_EQ(s[0].grad(0), 0.0);  // grads reset
}

TEST(Sgd, NonFiniteGradientLeavesParamsUntouched) {
  ParamStore s;
  s.add("a", 1, 2);
  s.add("b", 1, 1);
  s[0].value << 1, 2;
  s[0].grad << 0.5, 0.5;
  s[1].grad(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(sgd_step(s, 0.1), NumericsError);
  EXPECT_EQ(s[0].value(0), 1.0);
  EXPECT_EQ(s[0].value(1), 2.0);
}

TEST(LrScheduleTest, PaperDefaults) {
  const LrSchedule lr;
  EXPECT_DOUBLE_EQ(lr.at(0), 1e-5);
  EXPECT_DOUBLE_EQ(lr.at(49), 1e-5);
  EXPECT_NEAR(lr.at(50), 9e-6, 1e-18);
  EXPECT_NEAR(lr.at(100), 8.1e-6, 1e-18);
}

TEST(LrScheduleTest, NonIncreasing) {
  const LrSchedule lr{0.05, 0.5, 20};
  for (int e = 0; e < 500; ++e) EXPECT_LE(lr.at(e + 1), lr.at(e));
}

TEST(ClipGradNorm, ScalesToBound) {
  ParamStore s;
  s.add("selector.w", 1, 2);
  s.add("regressor.w", 1, 1);
  s[0].grad << 3, 4;
  s[1].grad(0) = 100.0;
  // Per-prefix clipping leaves the other group alone.
  EXPECT_DOUBLE_EQ(clip_grad_norm(s, 1.0, "selector."), 5.0);
  EXPECT_NEAR(s[0].grad.norm(), 1.0, 1e-12);
  EXPECT_EQ(s[1].grad(0), 100.0);
  const double before = clip_grad_norm(s, 2.0);
  EXPECT_NEAR(before, std::sqrt(1.0 + 1e4), 1e-9);
  EXPECT_NEAR(s.grad_norm(), 2.0, 1e-12);
  // Disabled clipping is a no-op.
  const Mat g = s[1].grad;
  clip_grad_norm(s, 0.0);
  EXPECT_EQ(s[1].grad, g);
}

TEST(ParamStoreTest, FanInInitBounds) {
  ParamStore s;
  s.add("w", 40, 25);
  std::mt19937_64 rng(0);
  s.init_uniform_fan_in(rng);
  EXPECT_LE(s[0].value.cwiseAbs().maxCoeff(), 1.0 / 5.0);
  EXPECT_GT(s[0].value.cwiseAbs().maxCoeff(), 0.15);
  EXPECT_THROW(s.add("w", 1, 1), InvalidInput);
  EXPECT_THROW(s.at("missing"), InvalidInput);
}

}  // namespace
}  // namespace pilot360
