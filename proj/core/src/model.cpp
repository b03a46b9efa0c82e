#include "pilot360/model.hpp"

#include <cmath>

#include "pilot360/errors.hpp"

namespace pilot360 {

void ModelConfig::validate() const {
  dims.validate();
  if (selector_hidden < 1 || regressor_hidden < 1) {
    throw InvalidInput("hidden sizes must be positive");
  }
  if (!(position_scale > 0.0) || !(action_scale > 0.0)) {
    throw InvalidInput("position_scale and action_scale must be positive");
  }
}

PilotModel::PilotModel(const ModelConfig& cfg) : config(cfg) {
  cfg.validate();
  const Eigen::Index hs = cfg.selector_hidden;
  const Eigen::Index hr = cfg.regressor_hidden;
  selector_cell.w_xh = params.add("selector.w_xh", hs, cfg.selector_input());
  selector_cell.w_hh = params.add("selector.w_hh", hs, hs);
  selector_cell.b = params.add("selector.b", hs, 1);
  selector_head = params.add("selector.w_s", cfg.dims.n, hs);
  regressor_cell.w_xh = params.add("regressor.w_xh", hr, cfg.regressor_input());
  regressor_cell.w_hh = params.add("regressor.w_hh", hr, hr);
  regressor_cell.b = params.add("regressor.b", hr, 1);
  regressor_head = params.add("regressor.w_r", 2, hr);
}

PilotModel PilotModel::initialized(const ModelConfig& cfg, std::uint64_t seed) {
  PilotModel m(cfg);
  std::mt19937_64 rng(seed);
  m.params.init_uniform_fan_in(rng);
  // Biases have a single column; use the fan-in of the cell they belong to.
  for (const RnnCellIds& cell : {m.selector_cell, m.regressor_cell}) {
    const auto fan_in = m.params[cell.w_xh].value.cols() + m.params[cell.w_hh].value.cols();
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-s, s);
    Mat& b = m.params[cell.b].value;
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
  }
  return m;
}

}  // namespace pilot360
