#include <cmath>
#include <string>

#include "pilot360/errors.hpp"
#include "pilot360/eval.hpp"

namespace pilot360 {

double mean_overlap(std::span<const ViewingAngle> pred, std::span<const ViewingAngle> gt) {
  if (pred.size() != gt.size()) {
    throw InvalidInput("mean_overlap: " + std::to_string(pred.size()) + " predicted frames vs " +
                       std::to_string(gt.size()) + " ground-truth frames");
  }
  if (pred.empty()) throw InvalidInput("mean_overlap: empty trajectory");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += nfov_iou({pred[t]}, {gt[t]});
  return sum / static_cast<double>(pred.size());
}

double mean_velocity_difference(std::span<const ViewingAngle> pred) {
  if (pred.size() < 3) throw InvalidInput("mean_velocity_difference: need at least 3 frames");
  double sum = 0.0;
  Action v_prev = angular_offset(pred[0], pred[1]);
  for (std::size_t t = 2; t < pred.size(); ++t) {
    const Action v = angular_offset(pred[t - 1], pred[t]);
    sum += std::hypot(v.d_azimuth - v_prev.d_azimuth, v.d_elevation - v_prev.d_elevation);
    v_prev = v;
  }
  return sum / static_cast<double>(pred.size() - 2);
}

}  // namespace pilot360
