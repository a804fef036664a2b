#include "leakaudit/nn/adamw.hpp"

#include "leakaudit/errors.hpp"

#include <cmath>

namespace leakaudit::nn {

AdamWState AdamWState::zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n), 0}; }

void adamw_step(Vector& params, const Vector& grads, AdamWState& state, const AdamWConfig& config) {
  if (!(config.lr > 0.0)) throw ParameterError("adamw: lr must be positive");
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ParameterError("adamw: parameter, gradient and state sizes differ");
  }
  if (!grads.allFinite()) throw NumericalError("adamw: non-finite gradient");

  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.lr * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * params[i]);
  }
}

} // namespace leakaudit::nn
