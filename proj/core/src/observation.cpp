#include "pilot360/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pilot360/errors.hpp"

namespace pilot360 {

void ObservationDims::validate() const {
  if (d < 1 || k < 1 || n < 1) {
    throw InvalidInput("observation dims must be positive (d=" + std::to_string(d) +
                       ", k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
}

ObjectObservation ObjectObservation::dummy(const ObservationDims& dims) {
  ObjectObservation o;
  o.appearance.assign(static_cast<std::size_t>(dims.d), 0.0);
  o.motion.assign(static_cast<std::size_t>(dims.k), 0.0);
  return o;
}

bool score_order_less(const ObjectObservation& a, const ObjectObservation& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.position.azimuth != b.position.azimuth) return a.position.azimuth < b.position.azimuth;
  if (a.position.elevation != b.position.elevation) {
    return a.position.elevation < b.position.elevation;
  }
  if (a.appearance != b.appearance) return a.appearance < b.appearance;
  return a.motion < b.motion;
}

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_object(const ObjectObservation& o, const ObservationDims& dims) {
  if (o.appearance.size() != static_cast<std::size_t>(dims.d)) {
    throw InvalidInput("appearance length " + std::to_string(o.appearance.size()) +
                       " != d=" + std::to_string(dims.d));
  }
  if (o.motion.size() != static_cast<std::size_t>(dims.k)) {
    throw InvalidInput("motion length " + std::to_string(o.motion.size()) +
                       " != k=" + std::to_string(dims.k));
  }
  if (!(o.score >= 0.0 && o.score <= 1.0)) {
    throw InvalidInput("object score outside [0, 1]");
  }
  if (!all_finite(o.appearance) || !all_finite(o.motion) ||
      !std::isfinite(o.position.azimuth) || !std::isfinite(o.position.elevation)) {
    throw InvalidInput("object features must be finite");
  }
}

}  // namespace

std::vector<double> flatten_objects(std::span<const ObjectObservation> objects,
                                    const ObservationDims& dims) {
  const auto n = static_cast<std::size_t>(dims.n);
  if (objects.size() != n) throw InvalidInput("flatten_objects: expected exactly n objects");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(dims.flat_size()));
  for (const auto& o : objects) flat.insert(flat.end(), o.appearance.begin(), o.appearance.end());
  for (const auto& o : objects) {
    flat.push_back(o.position.azimuth);
    flat.push_back(o.position.elevation);
  }
  for (const auto& o : objects) flat.insert(flat.end(), o.motion.begin(), o.motion.end());
  return flat;
}

FrameObservation make_frame_observation(std::span<const ObjectObservation> objects,
                                        const ObservationDims& dims,
                                        std::vector<int>& slot_of_input) {
  dims.validate();
  for (const auto& o : objects) check_object(o, dims);

  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score_order_less(objects[a], objects[b]);
  });

  const auto n = static_cast<std::size_t>(dims.n);
  slot_of_input.assign(objects.size(), -1);
  FrameObservation frame;
  frame.objects.reserve(n);
  for (std::size_t slot = 0; slot < std::min(n, order.size()); ++slot) {
    frame.objects.push_back(objects[order[slot]]);
    slot_of_input[order[slot]] = static_cast<int>(slot);
  }
  while (frame.objects.size() < n) frame.objects.push_back(ObjectObservation::dummy(dims));
  frame.flat = flatten_objects(frame.objects, dims);
  return frame;
}

FrameObservation make_frame_observation(std::span<const ObjectObservation> objects,
                                        const ObservationDims& dims) {
  std::vector<int> unused;
  return make_frame_observation(objects, dims, unused);
}

void Episode::validate(std::size_t min_length) const {
  dims.validate();
  if (frames.size() != gt.size()) {
    throw InvalidInput("episode has " + std::to_string(frames.size()) + " frames but " +
                       std::to_string(gt.size()) + " ground-truth angles");
  }
  if (frames.size() < min_length) {
    throw InvalidInput("episode shorter than " + std::to_string(min_length) + " frames");
  }
  if (!gt_object_index.empty() && gt_object_index.size() != frames.size()) {
    throw InvalidInput("gt_object_index length does not match frame count");
  }
  const auto n = static_cast<std::size_t>(dims.n);
  for (const auto& f : frames) {
    if (f.objects.size() != n || f.flat.size() != static_cast<std::size_t>(dims.flat_size())) {
      throw InvalidInput("frame dimensions do not match episode dims");
    }
  }
  for (int idx : gt_object_index) {
    if (idx < 0 || idx >= dims.n) throw InvalidInput("gt_object_index out of range");
  }
}

double main_top_score_rate(std::span<const Episode> episodes) {
  std::size_t total = 0;
  std::size_t top = 0;
  for (const auto& ep : episodes) {
    for (std::size_t t = 0; t < ep.gt_object_index.size(); ++t) {
      ++total;
      // Slot 0 holds the highest score after ordering.
      if (ep.gt_object_index[t] == 0) ++top;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(top) / static_cast<double>(total);
}

}  // namespace pilot360
