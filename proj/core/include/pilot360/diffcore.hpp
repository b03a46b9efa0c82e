#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pilot360 {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ParamTensor {
  std::string name;
  Mat value;
  Mat grad;

  ParamTensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
};

/// Ordered collection of named parameters. Order is insertion order and is
/// what checkpoints, SGD and gradient checks iterate over.
class ParamStore {
 public:
  /// Adds a zero-initialized tensor and returns its index.
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

  ParamTensor& operator[](std::size_t i) { return tensors_[i]; }
  const ParamTensor& operator[](std::size_t i) const { return tensors_[i]; }
  ParamTensor& at(std::string_view name);
  const ParamTensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  void zero_grad();
  double grad_norm() const;
  bool grads_finite() const;
  bool values_finite() const;

  /// Uniform in [-s, s] with s = 1/sqrt(fan_in), fan_in = columns.
  void init_uniform_fan_in(std::mt19937_64& rng);
  void set_zero();

 private:
  std::vector<ParamTensor> tensors_;
};

// ---------------------------------------------------------------------------
// Forward primitives

/// h = tanh(w_xh x + w_hh h_prev + b). Throws InvalidInput on shape mismatch.
Vec rnn_cell_forward(const Vec& x, const Vec& h_prev, const Mat& w_xh, const Mat& w_hh,
                     const Mat& b);

/// Max-subtracted softmax.
Vec softmax(const Vec& z);

/// d/dz log softmax(z)[i] = onehot(i) - softmax(z).
Vec log_softmax_grad(const Vec& probs, Eigen::Index i);

// ---------------------------------------------------------------------------
// Backpropagation through time

/// Weights of one tanh cell as positions in a ParamStore.
struct RnnCellIds {
  std::size_t w_xh;
  std::size_t w_hh;
  std::size_t b;
};

/// Record of an unrolled tanh-RNN forward pass.
///
/// Forward steps are appended with record(). backward() consumes the record
/// in reverse, accumulating exact parameter gradients into the store. For
/// recurrences coupled to other state (the regressor feeds back through the
/// viewing angle) use backward_step() one step at a time instead.
class RnnTape {
 public:
  void record(const Vec& x, const Vec& h_prev, const Vec& h);
  void clear();
  std::size_t steps() const { return xs_.size(); }
  const Vec& hidden(std::size_t t) const { return hs_.at(t); }
  const Vec& input(std::size_t t) const { return xs_.at(t); }

  struct StepGrad {
    Vec dx;
    Vec dh_prev;
  };

  /// Backward through step t given the total gradient on h_t.
  StepGrad backward_step(std::size_t t, const Vec& dh, ParamStore& store,
                         const RnnCellIds& ids) const;

  /// Full BPTT. dh_external[t] is the gradient on h_t arriving from outside
  /// the recurrence. Returns the input gradients dx_t. Throws StateError when
  /// nothing was recorded.
  std::vector<Vec> backward(std::span<const Vec> dh_external, ParamStore& store,
                            const RnnCellIds& ids) const;

 private:
  std::vector<Vec> xs_;
  std::vector<Vec> h_prevs_;
  std::vector<Vec> hs_;
};

// ---------------------------------------------------------------------------
// Optimization

struct LrSchedule {
  double initial = 1e-5;
  double decay = 0.9;
  int period = 50;

  /// initial * decay^floor(epoch / period)
  double at(int epoch) const;
  void validate() const;
};

/// p <- p - lr * g for every tensor, then zeroes the grads. Non-finite grads
/// raise NumericsError and leave every parameter untouched.
void sgd_step(ParamStore& store, double lr);

/// Rescales all grads so that their global L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

/// Same, restricted to the tensors whose name starts with `prefix`.
double clip_grad_norm(ParamStore& store, double max_norm, std::string_view prefix);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;
  double roundoff = 0.0;  // absolute slack granted to every comparison
  bool passed = true;

  const ParamCheck* worst() const;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Denominator floor so that near-zero gradients are compared absolutely.
  double abs_floor = 1e-6;
  // Rounding in the loss limits what a central difference can resolve to
  // about roundoff_ulps * eps * |loss| / step. That much of each discrepancy
  // is attributed to the numeric side and not counted as error.
  double roundoff_ulps = 1.0;
};

/// `objective(true)` must zero the grads, accumulate analytic gradients into
/// `store` and return the loss; `objective(false)` only returns the loss.
/// Raises NumericsError when the loss is not finite.
GradCheckReport gradient_check(ParamStore& store,
                               const std::function<double(bool)>& objective,
                               const GradCheckOptions& options = {});

}  // namespace pilot360
