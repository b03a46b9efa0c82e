#pragma once

#include <random>
#include <span>
#include <utility>

#include "pilot360/model.hpp"

namespace pilot360 {

struct SelectorState {
  Vec h;

  static SelectorState zero(const ModelConfig& cfg) {
    return {Vec::Zero(cfg.selector_hidden)};
  }
};

/// S_t: probability that each candidate slot holds the main object.
struct SelectionDistribution {
  Vec probs;

  Eigen::Index size() const { return probs.size(); }
};

/// v^O_t with positions divided by the model's position scale.
Vec selector_input(const FrameObservation& obs, const ModelConfig& cfg);

struct SelectorOutput {
  SelectorState state;
  SelectionDistribution dist;
};

/// h_t = RNN_S(v^O_t, h_{t-1}); S_t = softmax(W_s h_t).
SelectorOutput selector_forward(const PilotModel& model, const FrameObservation& obs,
                                const SelectorState& state);

/// Same step from an already scaled input vector.
SelectorOutput selector_forward(const PilotModel& model, const Vec& input,
                                const SelectorState& state);

/// argmax with ties resolved to the lowest index.
int select_greedy(const SelectionDistribution& dist);

/// Draws an index with probability probs[i]; consumes one uniform draw.
int select_sample(const SelectionDistribution& dist, std::mt19937_64& rng);

/// (1/Q) sum_q r_q * d/dlogits log S(i_q). With `baseline` the rewards are
/// centered on their mean first. This is the ascent direction of the
/// expected reward with respect to the softmax logits.
Vec policy_gradient_contribution(const SelectionDistribution& dist,
                                 std::span<const int> sampled,
                                 std::span<const double> rewards, bool baseline = false);

}  // namespace pilot360
