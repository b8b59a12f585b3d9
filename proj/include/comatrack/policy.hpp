#pragma once

// Compact stochastic policy: observation -> tanh MLP -> mean of a diagonal
// Gaussian over the flattened 5-waypoint plan, with a state-independent
// log-std vector. Log-density, entropy and KL are closed form; gradients are
// computed by hand-written reverse mode through the MLP.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "comatrack/arena.hpp"
#include "comatrack/error.hpp"
#include "comatrack/observation.hpp"
#include "comatrack/rng.hpp"

namespace comatrack {

inline const double kLogStdMin = std::log(1e-3);
inline constexpr double kLogStdMax = 0.0;
inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
inline const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

using ActionVector = std::array<double, kActionSize>;

// Layer sizes and the offsets of every block inside the flat parameter vector:
// [W_0 (out x in, row-major), b_0, W_1, b_1, ..., W_L, b_L, log_std].
class MlpShape {
 public:
  MlpShape() : MlpShape(std::vector<std::size_t>{64, 64}) {}
  explicit MlpShape(std::vector<std::size_t> hidden, std::size_t input = kObservationSize,
                    std::size_t output = kActionSize)
      : input_(input), output_(output), hidden_(std::move(hidden)) {
    std::size_t offset = 0;
    std::size_t in = input_;
    for (std::size_t l = 0; l <= hidden_.size(); ++l) {
      const std::size_t out = l < hidden_.size() ? hidden_[l] : output_;
      if (out == 0) throw ConfigError("policy layer sizes must be positive");
      ins_.push_back(in);
      outs_.push_back(out);
      w_off_.push_back(offset);
      offset += in * out;
      b_off_.push_back(offset);
      offset += out;
      in = out;
    }
    log_std_off_ = offset;
    total_ = offset + output_;
  }

  std::size_t input() const { return input_; }
  std::size_t output() const { return output_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  std::size_t layers() const { return outs_.size(); }
  std::size_t in(std::size_t l) const { return ins_[l]; }
  std::size_t out(std::size_t l) const { return outs_[l]; }
  std::size_t weight_offset(std::size_t l) const { return w_off_[l]; }
  std::size_t bias_offset(std::size_t l) const { return b_off_[l]; }
  std::size_t log_std_offset() const { return log_std_off_; }
  std::size_t size() const { return total_; }

  bool operator==(const MlpShape& o) const {
    return input_ == o.input_ && output_ == o.output_ && hidden_ == o.hidden_;
  }

 private:
  std::size_t input_;
  std::size_t output_;
  std::vector<std::size_t> hidden_;
  std::vector<std::size_t> ins_, outs_, w_off_, b_off_;
  std::size_t log_std_off_ = 0;
  std::size_t total_ = 0;
};

// Parameter-shaped flat vector; PolicyParams and Gradient share the layout.
template <typename Tag>
struct FlatParams {
  MlpShape shape;
  std::vector<double> flat;

  FlatParams() : flat(shape.size(), 0.0) {}
  explicit FlatParams(MlpShape s) : shape(std::move(s)), flat(shape.size(), 0.0) {}

  std::span<double> weights(std::size_t l) { return {flat.data() + shape.weight_offset(l), shape.in(l) * shape.out(l)}; }
  std::span<const double> weights(std::size_t l) const {
    return {flat.data() + shape.weight_offset(l), shape.in(l) * shape.out(l)};
  }
  std::span<double> bias(std::size_t l) { return {flat.data() + shape.bias_offset(l), shape.out(l)}; }
  std::span<const double> bias(std::size_t l) const { return {flat.data() + shape.bias_offset(l), shape.out(l)}; }
  std::span<double> log_std() { return {flat.data() + shape.log_std_offset(), shape.output()}; }
  std::span<const double> log_std() const { return {flat.data() + shape.log_std_offset(), shape.output()}; }

  bool all_finite() const {
    for (double v : flat)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const FlatParams& o) const { return shape == o.shape && flat == o.flat; }
};

struct PolicyTag {};
struct GradientTag {};
using PolicyParams = FlatParams<PolicyTag>;

struct Gradient : FlatParams<GradientTag> {
  using FlatParams<GradientTag>::FlatParams;

  Gradient& operator+=(const Gradient& o) {
    if (!(shape == o.shape)) throw UsageError("gradient shape mismatch");
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += o.flat[i];
    return *this;
  }
  Gradient& operator*=(double s) {
    for (double& v : flat) v *= s;
    return *this;
  }
  void zero() { std::fill(flat.begin(), flat.end(), 0.0); }
};

inline void clamp_log_std(PolicyParams& p) {
  for (double& s : p.log_std()) s = std::clamp(s, kLogStdMin, kLogStdMax);
}

// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
inline PolicyParams init_policy(const MlpShape& shape, std::uint64_t seed, double log_std_init = std::log(0.3)) {
  PolicyParams p(shape);
  Rng rng(derive_seed(seed, {0x706f6c696379ULL}));
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.in(l)));
    for (double& w : p.weights(l)) w = rng.uniform(-bound, bound);
  }
  for (double& s : p.log_std()) s = log_std_init;
  clamp_log_std(p);
  return p;
}

struct GaussianHead {
  ActionVector mean{};
  ActionVector log_std{};
};

// Post-activation values of every layer, kept for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> activations;  // [0] = input, [l+1] = output of layer l
  GaussianHead head;
};

inline void check_observation(const Observation& obs) {
  if (!obs.all_finite()) throw InputError("observation contains non-finite entries");
}

inline void forward_into(const PolicyParams& params, const Observation& obs, ForwardCache& cache) {
  check_observation(obs);
  const MlpShape& shape = params.shape;
  if (shape.input() != kObservationSize || shape.output() != kActionSize)
    throw UsageError("policy shape does not match the observation/action layout");
  cache.activations.resize(shape.layers() + 1);
  cache.activations[0].assign(obs.values.begin(), obs.values.end());
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const auto w = params.weights(l);
    const auto b = params.bias(l);
    const auto& x = cache.activations[l];
    auto& y = cache.activations[l + 1];
    const std::size_t in = shape.in(l), out = shape.out(l);
    y.resize(out);
    const bool hidden = l + 1 < shape.layers();
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = hidden ? std::tanh(acc) : acc;
    }
  }
  const auto& out = cache.activations.back();
  const auto ls = params.log_std();
  for (std::size_t i = 0; i < kActionSize; ++i) {
    cache.head.mean[i] = out[i];
    cache.head.log_std[i] = ls[i];
  }
}

inline GaussianHead forward(const PolicyParams& params, const Observation& obs) {
  ForwardCache cache;
  forward_into(params, obs, cache);
  return cache.head;
}

inline double gaussian_log_prob(const GaussianHead& h, const ActionVector& a) {
  double lp = 0.0;
  for (std::size_t i = 0; i < kActionSize; ++i) {
    const double z = (a[i] - h.mean[i]) * std::exp(-h.log_std[i]);
    lp += -0.5 * z * z - h.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

inline double log_prob(const PolicyParams& params, const Observation& obs, const ActionVector& action) {
  return gaussian_log_prob(forward(params, obs), action);
}

inline double entropy(const PolicyParams& params) {
  double h = 0.0;
  for (double s : params.log_std()) h += s + kHalfLog2PiE;
  return h;
}

// KL(p || q) between diagonal Gaussians.
inline double gaussian_kl(const GaussianHead& p, const GaussianHead& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < kActionSize; ++i) {
    const double var_ratio = std::exp(2.0 * (p.log_std[i] - q.log_std[i]));
    const double dm = (p.mean[i] - q.mean[i]) * std::exp(-q.log_std[i]);
    kl += (q.log_std[i] - p.log_std[i]) + 0.5 * (var_ratio + dm * dm) - 0.5;
  }
  return kl;
}

inline double kl_reference(const PolicyParams& params, const PolicyParams& ref, const Observation& obs) {
  return gaussian_kl(forward(params, obs), forward(ref, obs));
}

struct ActionSample {
  ActionVector action{};
  double log_prob = 0.0;
  double entropy = 0.0;
};

inline ActionSample sample_from(const GaussianHead& h, Rng& rng) {
  ActionSample s;
  for (std::size_t i = 0; i < kActionSize; ++i) {
    s.action[i] = h.mean[i] + std::exp(h.log_std[i]) * rng.normal();
    s.entropy += h.log_std[i] + kHalfLog2PiE;
  }
  s.log_prob = gaussian_log_prob(h, s.action);
  return s;
}

inline ActionSample sample_action(const PolicyParams& params, const Observation& obs, Rng& rng) {
  return sample_from(forward(params, obs), rng);
}

// Scalar objective J = log_prob * c_lp + entropy * c_ent + KL(params || ref) * c_kl;
// backward() returns dJ/dparams.
struct LossAdjoints {
  double log_prob = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
};

// Adds the gradient contribution of head adjoints (dJ/dmean, dJ/dlog_std) to `grad`.
// `scratch` avoids per-call allocation.
inline void backward_head(const PolicyParams& params, const ForwardCache& cache, std::span<const double> d_mean,
                          std::span<const double> d_log_std, Gradient& grad, std::vector<double>& scratch) {
  const MlpShape& shape = params.shape;
  if (!(grad.shape == shape)) throw UsageError("gradient shape mismatch");
  if (cache.activations.size() != shape.layers() + 1) throw UsageError("backward called without a matching forward");
  if (d_mean.size() != shape.output() || d_log_std.size() != shape.output())
    throw UsageError("head adjoint size mismatch");

  auto gls = grad.log_std();
  for (std::size_t i = 0; i < shape.output(); ++i) gls[i] += d_log_std[i];

  std::vector<double> delta(d_mean.begin(), d_mean.end());
  for (std::size_t l = shape.layers(); l-- > 0;) {
    const std::size_t in = shape.in(l), out = shape.out(l);
    const auto& x = cache.activations[l];
    auto gw = grad.weights(l);
    auto gb = grad.bias(l);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += d * x[i];
    }
    if (l == 0) break;
    const auto w = params.weights(l);
    scratch.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) scratch[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < in; ++i) {
      const double h = x[i];
      scratch[i] *= 1.0 - h * h;
    }
    delta.swap(scratch);
  }
}

// Head adjoints of J for a single (obs, action) given reference head output.
inline void head_adjoints(const GaussianHead& h, const ActionVector& action, const LossAdjoints& adj,
                          const GaussianHead* ref, ActionVector& d_mean, ActionVector& d_log_std) {
  for (std::size_t i = 0; i < kActionSize; ++i) {
    const double inv_var = std::exp(-2.0 * h.log_std[i]);
    const double diff = action[i] - h.mean[i];
    double dm = adj.log_prob * diff * inv_var;
    double ds = adj.log_prob * (diff * diff * inv_var - 1.0) + adj.entropy;
    if (adj.kl != 0.0) {
      if (!ref) throw UsageError("KL adjoint requires reference parameters");
      const double ref_inv_var = std::exp(-2.0 * ref->log_std[i]);
      dm += adj.kl * (h.mean[i] - ref->mean[i]) * ref_inv_var;
      ds += adj.kl * (std::exp(2.0 * h.log_std[i]) * ref_inv_var - 1.0);
    }
    d_mean[i] = dm;
    d_log_std[i] = ds;
  }
}

inline Gradient backward(const PolicyParams& params, const Observation& obs, const ActionVector& action,
                         const LossAdjoints& adj, const PolicyParams* ref = nullptr) {
  if (ref && !(ref->shape == params.shape)) throw UsageError("reference shape mismatch");
  ForwardCache cache;
  forward_into(params, obs, cache);
  GaussianHead ref_head;
  if (ref) ref_head = forward(*ref, obs);
  ActionVector d_mean{}, d_log_std{};
  head_adjoints(cache.head, action, adj, ref ? &ref_head : nullptr, d_mean, d_log_std);
  Gradient g(params.shape);
  std::vector<double> scratch;
  backward_head(params, cache, d_mean, d_log_std, g, scratch);
  return g;
}

inline ActionPlan mean_plan(const PolicyParams& params, const Observation& obs) {
  const GaussianHead h = forward(params, obs);
  return ActionPlan::from_flat(h.mean);
}

}  // namespace comatrack
