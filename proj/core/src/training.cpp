#include "pilot360/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pilot360/checkpoint.hpp"
#include "pilot360/errors.hpp"

namespace pilot360 {

double reward(const ViewingAngle& pred, const ViewingAngle& gt, double eta) {
  if (!(eta > 0.0)) throw InvalidInput("reward: eta must be positive");
  const double dist = angular_distance(pred, gt);
  return dist <= eta ? 1.0 - dist / eta : -1.0;
}

std::string to_string(RewardBaseline b) {
  switch (b) {
    case RewardBaseline::none: return "none";
    case RewardBaseline::batch_mean: return "batch_mean";
    case RewardBaseline::expected: return "expected";
  }
  return "none";
}

RewardBaseline parse_reward_baseline(std::string_view name) {
  for (auto b : {RewardBaseline::none, RewardBaseline::batch_mean, RewardBaseline::expected}) {
    if (name == to_string(b)) return b;
  }
  throw InvalidInput("unknown reward baseline '" + std::string(name) +
                     "' (expected none, batch_mean or expected)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  if (max_epochs < 0) throw InvalidInput("max_epochs must be >= 0");
  if (seq_len < 2) throw InvalidInput("seq_len must be >= 2");
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be >= 0");
  lr.validate();
  if (samples < 1) throw InvalidInput("samples (Q) must be >= 1");
  if (!(eta > 0.0)) throw InvalidInput("eta must be > 0");
  if (!std::isfinite(grad_clip)) throw InvalidInput("grad_clip must be finite");
  if (!(pg_weight >= 0.0)) throw InvalidInput("pg_weight must be >= 0");
  if (checkpoint_every < 1) throw InvalidInput("checkpoint_every must be >= 1");
}

double candidate_reward(const PilotModel& model, const FrameObservation& obs,
                        const ViewingAngle& gt, int candidate,
                        const RegressorState& regressor_prev, const ViewingAngle& angle_prev,
                        double eta) {
  if (candidate < 0 || candidate >= static_cast<int>(obs.objects.size())) {
    throw InvalidInput("candidate_reward: index out of range");
  }
  const ObjectObservation& o = obs.objects[static_cast<std::size_t>(candidate)];
  const RegressorOutput out =
      regressor_forward(model, o.motion, naive_action(o.position, angle_prev), regressor_prev);
  return reward(apply_action(angle_prev, out.action), gt, eta);
}

// ---------------------------------------------------------------------------

WindowRollout rollout_window(const PilotModel& model, const Episode& episode, std::size_t begin,
                             std::size_t length, SelectionMode mode, double eta,
                             std::mt19937_64* rng, std::span<const int> forced) {
  if (length < 1 || begin + length > episode.length()) {
    throw InvalidInput("rollout_window: window outside the episode");
  }
  if (mode == SelectionMode::sample && rng == nullptr) {
    throw InvalidInput("rollout_window: sampling needs an rng");
  }
  if (mode == SelectionMode::forced && forced.size() != length) {
    throw InvalidInput("rollout_window: forced indices must cover the window");
  }
  const ModelConfig& cfg = model.config;
  const ParamStore& p = model.params;

  WindowRollout r;
  r.episode = &episode;
  r.begin = begin;
  r.length = length;
  r.init = episode.gt[begin];
  r.probs.reserve(length);
  r.index.reserve(length);
  r.angle.reserve(length);
  r.elevation_clamped.reserve(length);
  r.rewards.reserve(length);

  Vec h = Vec::Zero(cfg.selector_hidden);
  Vec mu = Vec::Zero(cfg.regressor_hidden);
  ViewingAngle prev = r.init;
  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = begin + s;
    const FrameObservation& obs = episode.frames[t];

    const Vec x = selector_input(obs, cfg);
    const SelectorOutput sel = selector_forward(model, x, SelectorState{h});
    r.selector_tape.record(x, h, sel.state.h);
    h = sel.state.h;

    int i = 0;
    switch (mode) {
      case SelectionMode::sample: i = select_sample(sel.dist, *rng); break;
      case SelectionMode::greedy: i = select_greedy(sel.dist); break;
      case SelectionMode::forced: i = forced[s]; break;
    }
    if (i < 0 || i >= cfg.dims.n) throw InvalidInput("rollout_window: index out of range");
    const ObjectObservation& o = obs.objects[static_cast<std::size_t>(i)];

    const Vec u = regressor_input(o.motion, naive_action(o.position, prev), cfg);
    const Vec mu_next = rnn_cell_forward(u, mu, p[model.regressor_cell.w_xh].value,
                                         p[model.regressor_cell.w_hh].value,
                                         p[model.regressor_cell.b].value);
    r.regressor_tape.record(u, mu, mu_next);
    mu = mu_next;
    const Eigen::Vector2d d = cfg.action_scale * (p[model.regressor_head].value * mu);
    const double raw_el = prev.elevation + d(1);
    const ViewingAngle next = apply_action(prev, {d(0), d(1)});

    r.probs.push_back(sel.dist.probs);
    r.index.push_back(i);
    r.angle.push_back(next);
    r.elevation_clamped.push_back(raw_el < -90.0 || raw_el > 90.0);
    r.rewards.push_back(reward(next, episode.gt[t], eta));
    prev = next;
  }
  return r;
}

void attach_expected_baseline(const PilotModel& model, WindowRollout& r, double eta) {
  r.frame_baseline.assign(r.length, 0.0);
  for (std::size_t s = 0; s < r.length; ++s) {
    const std::size_t t = r.begin + s;
    const RegressorState mu_prev{s == 0 ? Vec::Zero(model.config.regressor_hidden)
                                        : r.regressor_tape.hidden(s - 1)};
    const ViewingAngle& prev = s == 0 ? r.init : r.angle[s - 1];
    const Vec& probs = r.probs[s];
    double b = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      b += probs(i) * candidate_reward(model, r.episode->frames[t], r.episode->gt[t],
                                       static_cast<int>(i), mu_prev, prev, eta);
    }
    r.frame_baseline[s] = b;
  }
}

namespace {

double pg_surrogate(const WindowRollout& r, std::span<const double> rewards,
                    const ObjectiveWeights& w) {
  double s = 0.0;
  for (std::size_t t = 0; t < r.length; ++t) {
    const double p = r.probs[t](r.index[t]);
    s += -(rewards[t] - w.baseline - r.baseline_at(t)) * std::log(p);
  }
  return s;
}

}  // namespace

double window_objective(const WindowRollout& r, std::span<const double> rewards,
                        const ObjectiveWeights& w) {
  if (rewards.size() != r.length) throw InvalidInput("window_objective: reward count mismatch");
  double value = 0.0;
  if (w.supervised && r.length >= 2) value += trajectory_loss(r.angle, r.gt(), w.lambda).total;
  if (w.reinforce) value += w.pg_weight * pg_surrogate(r, rewards, w);
  return w.scale * value;
}

double accumulate_window_gradients(PilotModel& model, const WindowRollout& r,
                                   const ObjectiveWeights& w, GradientFault fault) {
  const ModelConfig& cfg = model.config;
  ParamStore& p = model.params;
  const std::size_t T = r.length;
  const double A = cfg.action_scale;

  // Regressor path: gradient of the supervised loss w.r.t. every l_t, then
  // backwards through l_t = l_{t-1} + Delta_t with Delta_t depending on
  // l_{t-1} through the naive action.
  if (w.supervised && T >= 2) {
    std::vector<AngleGrad> g;
    trajectory_loss_grad(r.angle, r.gt(), w.lambda, g);
    for (auto& x : g) {
      x[0] *= w.scale;
      x[1] *= w.scale;
    }
    const Mat& w_r = p[model.regressor_head].value;
    Mat& w_r_grad = p[model.regressor_head].grad;
    Vec carry = Vec::Zero(cfg.regressor_hidden);
    for (std::size_t t = T; t-- > 0;) {
      const Eigen::Vector2d mask(1.0, r.elevation_clamped[t] ? 0.0 : 1.0);
      const Eigen::Vector2d gl(g[t][0], g[t][1]);
      const Eigen::Vector2d g_delta = mask.cwiseProduct(gl);
      if (t > 0) {
        g[t - 1][0] += g_delta(0);
        g[t - 1][1] += g_delta(1);
      }
      const Vec& mu = r.regressor_tape.hidden(t);
      w_r_grad.noalias() += A * g_delta * mu.transpose();
      const Vec g_mu = A * (w_r.transpose() * g_delta) + carry;
      RnnTape::StepGrad sg = r.regressor_tape.backward_step(t, g_mu, p, model.regressor_cell);
      carry = std::move(sg.dh_prev);
      // naive = offset(l_{t-1}, p): d/dl_{t-1} = -1 (l_{-1} is the fixed init).
      if (t > 0 && fault != GradientFault::drop_angle_feedback) {
        g[t - 1][0] -= sg.dx(cfg.dims.k) / A;
        g[t - 1][1] -= sg.dx(cfg.dims.k + 1) / A;
      }
    }
  }

  // Selector path: REINFORCE through the softmax head and RNN_S.
  if (w.reinforce) {
    const Mat& w_s = p[model.selector_head].value;
    Mat& w_s_grad = p[model.selector_head].grad;
    std::vector<Vec> dh(T);
    for (std::size_t t = 0; t < T; ++t) {
      const Vec gz = w.scale * w.pg_weight * -(r.rewards[t] - w.baseline - r.baseline_at(t)) *
                     log_softmax_grad(r.probs[t], r.index[t]);
      const Vec& h = r.selector_tape.hidden(t);
      w_s_grad.noalias() += gz * h.transpose();
      dh[t] = w_s.transpose() * gz;
    }
    if (fault == GradientFault::drop_selector_recurrence) {
      for (std::size_t t = 0; t < T; ++t) {
        r.selector_tape.backward_step(t, dh[t], p, model.selector_cell);
      }
    } else {
      r.selector_tape.backward(dh, p, model.selector_cell);
    }
  }
  return window_objective(r, r.rewards, w);
}

// ---------------------------------------------------------------------------

std::vector<TrainWindow> make_windows(std::span<const Episode> episodes, int seq_len) {
  if (seq_len < 2) throw InvalidInput("make_windows: seq_len must be >= 2");
  std::vector<TrainWindow> out;
  const auto L = static_cast<std::size_t>(seq_len);
  for (const auto& ep : episodes) {
    for (std::size_t b = 0; b < ep.length(); b += L) {
      const std::size_t len = std::min(L, ep.length() - b);
      if (len >= 2) out.push_back({&ep, b, len});
    }
  }
  return out;
}

StepDiagnostics train_step(PilotModel& model, std::span<const TrainWindow> batch,
                           const TrainConfig& config, double lr, std::mt19937_64& rng) {
  if (batch.empty()) throw InvalidInput("train_step: empty batch");
  std::vector<WindowRollout> rollouts;
  rollouts.reserve(batch.size() * static_cast<std::size_t>(config.samples));
  std::size_t frames = 0;
  double reward_sum = 0.0;
  for (int q = 0; q < config.samples; ++q) {
    for (const auto& win : batch) {
      if (win.length > static_cast<std::size_t>(config.seq_len)) {
        throw InvalidInput("train_step: window longer than seq_len");
      }
      rollouts.push_back(rollout_window(model, *win.episode, win.begin, win.length,
                                        SelectionMode::sample, config.eta, &rng));
      if (config.reward_baseline == RewardBaseline::expected) {
        attach_expected_baseline(model, rollouts.back(), config.eta);
      }
      frames += win.length;
      for (double x : rollouts.back().rewards) reward_sum += x;
    }
  }

  StepDiagnostics diag;
  diag.mean_reward = reward_sum / static_cast<double>(frames);
  diag.loss.lambda = config.lambda;
  for (const auto& r : rollouts) {
    if (r.length < 2) continue;
    const LossBreakdown lb = trajectory_loss(r.angle, r.gt(), config.lambda);
    diag.loss.regression += lb.regression;
    diag.loss.smoothness += lb.smoothness;
  }
  const double nr = static_cast<double>(rollouts.size());
  diag.loss.regression /= nr;
  diag.loss.smoothness /= nr;
  diag.loss.total = diag.loss.regression + config.lambda * diag.loss.smoothness;

  ObjectiveWeights w;
  w.lambda = config.lambda;
  w.pg_weight = config.pg_weight;
  w.scale = 1.0 / static_cast<double>(frames);
  w.baseline = config.reward_baseline == RewardBaseline::batch_mean ? diag.mean_reward : 0.0;

  // Gradients are accumulated on a scratch copy so that a failed step leaves
  // the caller's parameters and grads exactly as they were.
  ParamStore scratch = model.params;
  scratch.zero_grad();
  std::swap(scratch, model.params);
  double objective = 0.0;
  for (const auto& r : rollouts) objective += accumulate_window_gradients(model, r, w);
  std::swap(scratch, model.params);

  if (!std::isfinite(objective) || !std::isfinite(diag.loss.total) || !scratch.grads_finite()) {
    throw NumericsError("train_step: non-finite loss or gradient; update skipped");
  }
  diag.grad_norm = scratch.grad_norm();
  // The two networks optimize different objectives whose gradients differ by
  // orders of magnitude; a shared clip would let the supervised term starve
  // the policy gradient.
  clip_grad_norm(scratch, config.grad_clip, "selector.");
  clip_grad_norm(scratch, config.grad_clip, "regressor.");
  sgd_step(scratch, lr);
  if (!scratch.values_finite()) {
    throw NumericsError("train_step: update produced non-finite parameters; update skipped");
  }
  model.params = std::move(scratch);
  return diag;
}

EpochMetrics run_epoch(TrainerState& state, std::span<const TrainWindow> windows,
                       const TrainConfig& config) {
  if (windows.empty()) throw InvalidInput("run_epoch: no training windows");
  std::vector<TrainWindow> order(windows.begin(), windows.end());
  std::shuffle(order.begin(), order.end(), state.rng);

  EpochMetrics m;
  m.epoch = state.epoch;
  m.lr = config.lr.at(state.epoch);
  std::size_t steps = 0;
  const auto B = static_cast<std::size_t>(config.batch_size);
  for (std::size_t b = 0; b < order.size(); b += B) {
    const std::size_t len = std::min(B, order.size() - b);
    const StepDiagnostics d =
        train_step(state.model, std::span<const TrainWindow>(order).subspan(b, len), config,
                   m.lr, state.rng);
    m.regression += d.loss.regression;
    m.smoothness += d.loss.smoothness;
    m.total += d.loss.total;
    m.mean_reward += d.mean_reward;
    ++steps;
  }
  const double n = static_cast<double>(steps);
  m.regression /= n;
  m.smoothness /= n;
  m.total /= n;
  m.mean_reward /= n;
  ++state.epoch;
  return m;
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void write_checkpoint(const TrainerState& state, const TrainConfig& config,
                      const std::filesystem::path& dir) {
  save_checkpoint({state.model, state.epoch, config.lr, rng_to_string(state.rng)},
                  checkpoint_path(dir, state.epoch));
}

}  // namespace

TrainerState make_trainer_state(const ModelConfig& model, const TrainConfig& config,
                                std::uint64_t init_seed) {
  return {PilotModel::initialized(model, init_seed), 0, std::mt19937_64(config.seed)};
}

TrainerState resume_trainer_state(const Checkpoint& ckpt) {
  TrainerState state{ckpt.model, ckpt.epoch, std::mt19937_64()};
  if (ckpt.rng_state.empty()) throw StateError("checkpoint carries no RNG state; cannot resume");
  std::istringstream is(ckpt.rng_state);
  is >> state.rng;
  if (is.fail()) throw ParseError(1, "checkpoint RNG state is malformed");
  return state;
}

std::vector<EpochMetrics> train(TrainerState& state, std::span<const Episode> dataset,
                                const TrainConfig& config, const TrainOutputs& outputs) {
  config.validate();
  if (dataset.empty()) throw InvalidInput("train: empty training set");
  for (const auto& ep : dataset) {
    ep.validate();
    if (ep.dims != state.model.config.dims) {
      throw ConfigError("train: episode dims do not match the model architecture");
    }
  }
  const std::vector<TrainWindow> windows = make_windows(dataset, config.seq_len);

  const bool persist = !outputs.out_dir.empty();
  std::ofstream log;
  if (persist) {
    std::filesystem::create_directories(outputs.out_dir);
    const auto log_path = outputs.out_dir / "metrics.jsonl";
    log.open(log_path, state.epoch == 0 ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open metrics log " + log_path.string());
    if (!std::filesystem::exists(checkpoint_path(outputs.out_dir, state.epoch))) {
      write_checkpoint(state, config, outputs.out_dir);
    }
  }

  std::vector<EpochMetrics> history;
  while (state.epoch < config.max_epochs) {
    const EpochMetrics m = run_epoch(state, windows, config);
    history.push_back(m);
    if (persist) {
      nlohmann::json rec = {{"epoch", m.epoch},           {"lr", m.lr},
                            {"regression", m.regression}, {"smoothness", m.smoothness},
                            {"total", m.total},           {"mean_reward", m.mean_reward}};
      log << rec.dump() << '\n';
      log.flush();
      if (!log) throw IoError("write failed on metrics log in " + outputs.out_dir.string());
      if (state.epoch % config.checkpoint_every == 0 || state.epoch == config.max_epochs) {
        write_checkpoint(state, config, outputs.out_dir);
      }
    }
    if (outputs.on_epoch) outputs.on_epoch(m);
  }
  return history;
}

}  // namespace pilot360
