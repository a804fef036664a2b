#pragma once

#include "leakaudit/nn/params.hpp"

namespace leakaudit::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamWState {
  Vector m;
  Vector v;
  long t = 0;

  static AdamWState zeros(Eigen::Index n);
};

// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
void adamw_step(Vector& params, const Vector& grads, AdamWState& state, const AdamWConfig& config);

} // namespace leakaudit::nn
