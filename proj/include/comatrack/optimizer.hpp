#pragma once

// Adaptive moment estimation over the flat parameter vector.

#include <cmath>
#include <vector>

#include "comatrack/error.hpp"
#include "comatrack/policy.hpp"

namespace comatrack {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
};

// Descends along `grad` (i.e. grad is dLoss/dparams). log_std is re-clamped.
inline void adam_step(PolicyParams& params, const Gradient& grad, AdamState& state, const AdamConfig& cfg) {
  if (!(grad.shape == params.shape)) throw UsageError("gradient shape does not match parameters");
  if (!grad.all_finite()) throw TrainingError("non-finite gradient");
  const std::size_t n = params.flat.size();
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.t = 0;
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.flat[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params.flat[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  clamp_log_std(params);
}

inline std::pair<PolicyParams, AdamState> update(const PolicyParams& params, const Gradient& grad, AdamState state,
                                                 const AdamConfig& cfg) {
  PolicyParams next = params;
  adam_step(next, grad, state, cfg);
  return {std::move(next), std::move(state)};
}

}  // namespace comatrack
