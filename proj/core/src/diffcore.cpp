#include "pilot360/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pilot360/errors.hpp"

namespace pilot360 {

std::size_t ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (contains(name)) throw InvalidInput("duplicate parameter name '" + name + "'");
  tensors_.emplace_back(std::move(name), rows, cols);
  return tensors_.size() - 1;
}

ParamTensor& ParamStore::at(std::string_view name) {
  for (auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw InvalidInput("unknown parameter '" + std::string(name) + "'");
}

const ParamTensor& ParamStore::at(std::string_view name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const ParamTensor& t) { return t.name == name; });
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& t : tensors_) s += t.grad.squaredNorm();
  return std::sqrt(s);
}

bool ParamStore::grads_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(),
                     [](const ParamTensor& t) { return t.grad.allFinite(); });
}

bool ParamStore::values_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(),
                     [](const ParamTensor& t) { return t.value.allFinite(); });
}

void ParamStore::init_uniform_fan_in(std::mt19937_64& rng) {
  for (auto& t : tensors_) {
    const double s = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, t.value.cols())));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = u(rng);
    t.grad.setZero();
  }
}

void ParamStore::set_zero() {
  for (auto& t : tensors_) {
    t.value.setZero();
    t.grad.setZero();
  }
}

// ---------------------------------------------------------------------------

Vec rnn_cell_forward(const Vec& x, const Vec& h_prev, const Mat& w_xh, const Mat& w_hh,
                     const Mat& b) {
  const Eigen::Index H = w_hh.rows();
  if (w_hh.cols() != H || w_xh.rows() != H || b.rows() != H || b.cols() != 1) {
    throw InvalidInput("rnn_cell_forward: inconsistent weight shapes");
  }
  if (x.size() != w_xh.cols()) {
    throw InvalidInput("rnn_cell_forward: input length " + std::to_string(x.size()) +
                       " != " + std::to_string(w_xh.cols()));
  }
  if (h_prev.size() != H) throw InvalidInput("rnn_cell_forward: hidden length mismatch");
  Vec a = w_xh * x + w_hh * h_prev + b.col(0);
  return a.array().tanh().matrix();
}

Vec softmax(const Vec& z) {
  if (z.size() == 0) return z;
  const double m = z.maxCoeff();
  Vec e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

Vec log_softmax_grad(const Vec& probs, Eigen::Index i) {
  Vec g = -probs;
  g(i) += 1.0;
  return g;
}

// ---------------------------------------------------------------------------

void RnnTape::record(const Vec& x, const Vec& h_prev, const Vec& h) {
  xs_.push_back(x);
  h_prevs_.push_back(h_prev);
  hs_.push_back(h);
}

void RnnTape::clear() {
  xs_.clear();
  h_prevs_.clear();
  hs_.clear();
}

RnnTape::StepGrad RnnTape::backward_step(std::size_t t, const Vec& dh, ParamStore& store,
                                         const RnnCellIds& ids) const {
  if (t >= hs_.size()) {
    throw StateError("RnnTape::backward_step: step " + std::to_string(t) +
                     " was never recorded");
  }
  ParamTensor& w_xh = store[ids.w_xh];
  ParamTensor& w_hh = store[ids.w_hh];
  ParamTensor& b = store[ids.b];
  const Vec& h = hs_[t];
  const Vec da = (dh.array() * (1.0 - h.array().square())).matrix();
  w_xh.grad.noalias() += da * xs_[t].transpose();
  w_hh.grad.noalias() += da * h_prevs_[t].transpose();
  b.grad.col(0) += da;
  return {w_xh.value.transpose() * da, w_hh.value.transpose() * da};
}

std::vector<Vec> RnnTape::backward(std::span<const Vec> dh_external, ParamStore& store,
                                   const RnnCellIds& ids) const {
  if (hs_.empty()) throw StateError("RnnTape::backward called without a recorded forward pass");
  if (dh_external.size() != hs_.size()) {
    throw InvalidInput("RnnTape::backward: upstream gradient count != recorded steps");
  }
  std::vector<Vec> dxs(hs_.size());
  Vec carry = Vec::Zero(hs_.back().size());
  for (std::size_t t = hs_.size(); t-- > 0;) {
    StepGrad g = backward_step(t, dh_external[t] + carry, store, ids);
    dxs[t] = std::move(g.dx);
    carry = std::move(g.dh_prev);
  }
  return dxs;
}

// ---------------------------------------------------------------------------

double LrSchedule::at(int epoch) const {
  if (epoch < 0) epoch = 0;
  return initial * std::pow(decay, static_cast<double>(epoch / period));
}

void LrSchedule::validate() const {
  if (!(initial >= 0.0) || !std::isfinite(initial)) throw InvalidInput("lr initial must be >= 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInput("lr decay must lie in (0, 1]");
  if (period < 1) throw InvalidInput("lr period must be >= 1");
}

void sgd_step(ParamStore& store, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidInput("sgd_step: lr must be finite and >= 0");
  if (!store.grads_finite()) {
    throw NumericsError("sgd_step: non-finite gradient; parameters left unchanged");
  }
  for (auto& t : store) {
    t.value -= lr * t.grad;
    t.grad.setZero();
  }
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& t : store) t.grad *= s;
  }
  return norm;
}

double clip_grad_norm(ParamStore& store, double max_norm, std::string_view prefix) {
  double sq = 0.0;
  for (const auto& t : store) {
    if (t.name.starts_with(prefix)) sq += t.grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& t : store) {
      if (t.name.starts_with(prefix)) t.grad *= s;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------

const ParamCheck* GradCheckReport::worst() const {
  const ParamCheck* w = nullptr;
  for (const auto& p : params) {
    if (!w || p.max_rel_error > w->max_rel_error) w = &p;
  }
  return w;
}

GradCheckReport gradient_check(ParamStore& store, const std::function<double(bool)>& objective,
                               const GradCheckOptions& opt) {
  GradCheckReport report;
  report.tolerance = opt.tolerance;

  const double base = objective(true);
  if (!std::isfinite(base)) throw NumericsError("gradient_check: loss is not finite");
  const double noise =
      opt.roundoff_ulps * std::numeric_limits<double>::epsilon() * std::abs(base) / opt.step;
  report.roundoff = noise;
  std::vector<Mat> analytic;
  analytic.reserve(store.size());
  for (const auto& t : store) analytic.push_back(t.grad);

  for (std::size_t p = 0; p < store.size(); ++p) {
    ParamCheck pc;
    pc.name = store[p].name;
    for (Eigen::Index i = 0; i < store[p].value.size(); ++i) {
      double& w = store[p].value.data()[i];
      const double saved = w;
      w = saved + opt.step;
      const double up = objective(false);
      w = saved - opt.step;
      const double down = objective(false);
      w = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericsError("gradient_check: loss is not finite under perturbation of " + pc.name);
      }
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic[p].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.abs_floor});
      const double rel = std::max(0.0, std::abs(a - numeric) - noise) / denom;
      if (rel > pc.max_rel_error || pc.worst_index < 0) {
        pc.max_rel_error = rel;
        pc.worst_index = i;
        pc.analytic = a;
        pc.numeric = numeric;
      }
    }
    if (!(pc.max_rel_error < opt.tolerance)) report.passed = false;
    report.params.push_back(std::move(pc));
  }
  // Leave the store holding the analytic gradient of the unperturbed point.
  for (std::size_t p = 0; p < store.size(); ++p) store[p].grad = analytic[p];
  return report;
}

}  // namespace pilot360
