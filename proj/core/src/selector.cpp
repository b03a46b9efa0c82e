#include "pilot360/selector.hpp"

#include <cmath>
#include <string>

#include "pilot360/errors.hpp"

namespace pilot360 {

Vec selector_input(const FrameObservation& obs, const ModelConfig& cfg) {
  const ObservationDims& dims = cfg.dims;
  if (obs.flat.size() != static_cast<std::size_t>(dims.flat_size())) {
    throw InvalidInput("selector_input: observation length " + std::to_string(obs.flat.size()) +
                       " != (d+2+k)*N = " + std::to_string(dims.flat_size()));
  }
  Vec x = Eigen::Map<const Vec>(obs.flat.data(), static_cast<Eigen::Index>(obs.flat.size()));
  const Eigen::Index pos_begin = static_cast<Eigen::Index>(dims.d) * dims.n;
  x.segment(pos_begin, 2 * dims.n) /= cfg.position_scale;
  return x;
}

SelectorOutput selector_forward(const PilotModel& model, const Vec& input,
                                const SelectorState& state) {
  const ParamStore& p = model.params;
  SelectorOutput out;
  out.state.h = rnn_cell_forward(input, state.h, p[model.selector_cell.w_xh].value,
                                 p[model.selector_cell.w_hh].value,
                                 p[model.selector_cell.b].value);
  out.dist.probs = softmax(p[model.selector_head].value * out.state.h);
  return out;
}

SelectorOutput selector_forward(const PilotModel& model, const FrameObservation& obs,
                                const SelectorState& state) {
  return selector_forward(model, selector_input(obs, model.config), state);
}

int select_greedy(const SelectionDistribution& dist) {
  if (dist.size() == 0) throw InvalidInput("select_greedy: empty distribution");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < dist.size(); ++i) {
    if (dist.probs(i) > dist.probs(best)) best = i;
  }
  return static_cast<int>(best);
}

int select_sample(const SelectionDistribution& dist, std::mt19937_64& rng) {
  if (dist.size() == 0) throw InvalidInput("select_sample: empty distribution");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cum = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    if (dist.probs(i) <= 0.0) continue;
    last_positive = i;
    cum += dist.probs(i);
    if (u < cum) return static_cast<int>(i);
  }
  // Rounding left the cumulative sum just below u.
  return static_cast<int>(last_positive);
}

Vec policy_gradient_contribution(const SelectionDistribution& dist, std::span<const int> sampled,
                                 std::span<const double> rewards, bool baseline) {
  if (sampled.empty()) throw InvalidInput("policy_gradient_contribution: need Q >= 1 samples");
  if (sampled.size() != rewards.size()) {
    throw InvalidInput("policy_gradient_contribution: sample and reward counts differ");
  }
  double mean = 0.0;
  if (baseline) {
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
  }
  Vec g = Vec::Zero(dist.size());
  for (std::size_t q = 0; q < sampled.size(); ++q) {
    const int i = sampled[q];
    if (i < 0 || i >= dist.size()) {
      throw InvalidInput("policy_gradient_contribution: index " + std::to_string(i) +
                         " out of range");
    }
    if (!std::isfinite(rewards[q])) throw InvalidInput("policy_gradient_contribution: reward not finite");
    g += (rewards[q] - mean) * log_softmax_grad(dist.probs, i);
  }
  return g / static_cast<double>(sampled.size());
}

}  // namespace pilot360
