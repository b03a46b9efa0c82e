#include "pilot360/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "pilot360/errors.hpp"
#include "pilot360/observation.hpp"
#include "pilot360/regressor.hpp"

namespace pilot360 {

std::string_view to_string(GradCheckTarget target) {
  switch (target) {
    case GradCheckTarget::selector: return "selector";
    case GradCheckTarget::regressor: return "regressor";
    case GradCheckTarget::joint: return "joint";
    case GradCheckTarget::trajectory_loss: return "trajectory_loss";
  }
  return "?";
}

namespace {

GradCheckReport check_trajectory_loss(const GradCheckSetup& setup, std::uint64_t seed,
                                      const GradCheckOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> az(30.0, 330.0);
  std::uniform_real_distribution<double> el(-60.0, 60.0);
  std::uniform_real_distribution<double> jitter(-8.0, 8.0);
  const auto T = static_cast<std::size_t>(setup.frames);

  std::vector<ViewingAngle> gt(T);
  ParamStore store;
  store.add("pred", static_cast<Eigen::Index>(T), 2);
  Mat& pred = store[0].value;
  for (std::size_t t = 0; t < T; ++t) {
    gt[t] = {az(rng), el(rng)};
    pred(static_cast<Eigen::Index>(t), 0) = std::clamp(gt[t].azimuth + jitter(rng), 1.0, 359.0);
    pred(static_cast<Eigen::Index>(t), 1) = gt[t].elevation + jitter(rng);
  }
  auto angles = [&] {
    std::vector<ViewingAngle> a(T);
    for (std::size_t t = 0; t < T; ++t) {
      a[t] = ViewingAngle::make(pred(static_cast<Eigen::Index>(t), 0),
                                pred(static_cast<Eigen::Index>(t), 1));
    }
    return a;
  };
  auto objective = [&](bool with_grad) {
    const auto a = angles();
    if (!with_grad) return trajectory_loss(a, gt, setup.lambda).total;
    std::vector<AngleGrad> g;
    const double v = trajectory_loss_grad(a, gt, setup.lambda, g).total;
    store.zero_grad();
    for (std::size_t t = 0; t < T; ++t) {
      store[0].grad(static_cast<Eigen::Index>(t), 0) = g[t][0];
      store[0].grad(static_cast<Eigen::Index>(t), 1) = g[t][1];
    }
    return v;
  };
  return gradient_check(store, objective, options);
}

}  // namespace

GradCheckReport run_gradient_check(GradCheckTarget target, const GradCheckSetup& setup,
                                   std::uint64_t seed, const GradCheckOptions& options,
                                   GradientFault fault) {
  if (target == GradCheckTarget::trajectory_loss) {
    return check_trajectory_loss(setup, seed, options);
  }

  SceneConfig scene;
  scene.dims = setup.model.dims;
  scene.frames = setup.frames;
  scene.objects = setup.objects;
  const Episode episode = synth_scene(scene, seed);

  PilotModel model = PilotModel::initialized(setup.model, seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 rng(seed + 1);
  const auto T = static_cast<std::size_t>(setup.frames);

  // Freeze one sampled rollout: its selections and rewards define the surrogate.
  const WindowRollout frozen =
      rollout_window(model, episode, 0, T, SelectionMode::sample, setup.eta, &rng);
  const std::vector<int> indices = frozen.index;
  const std::vector<double> rewards = frozen.rewards;

  ObjectiveWeights w;
  w.lambda = setup.lambda;
  w.scale = 1.0 / static_cast<double>(T);
  w.supervised = target != GradCheckTarget::selector;
  w.reinforce = target != GradCheckTarget::regressor;

  GradCheckOptions opts = options;
  // Restrict the report to the parameters the target owns.
  ParamStore& store = model.params;
  auto objective = [&](bool with_grad) {
    WindowRollout r =
        rollout_window(model, episode, 0, T, SelectionMode::forced, setup.eta, nullptr, indices);
    r.rewards = rewards;
    if (!with_grad) return window_objective(r, rewards, w);
    store.zero_grad();
    return accumulate_window_gradients(model, r, w, fault);
  };

  GradCheckReport full = gradient_check(store, objective, opts);
  if (target == GradCheckTarget::joint) return full;
  const std::string prefix = target == GradCheckTarget::selector ? "selector." : "regressor.";
  GradCheckReport report;
  report.tolerance = full.tolerance;
  report.roundoff = full.roundoff;
  for (auto& p : full.params) {
    if (p.name.rfind(prefix, 0) == 0) {
      if (!(p.max_rel_error < report.tolerance)) report.passed = false;
      report.params.push_back(std::move(p));
    }
  }
  return report;
}

}  // namespace pilot360
