#pragma once

#include "leakaudit/nn/losses.hpp"
#include "leakaudit/nn/params.hpp"

#include <cstdint>

namespace leakaudit::nn {

// A differentiable model over flattened inputs (one row per sample).
class Model {
public:
  virtual ~Model() = default;

  virtual Eigen::Index input_size() const = 0;
  virtual Eigen::Index output_size() const = 0;
  virtual ModelParams init_params(std::uint64_t seed) const = 0;
  virtual Matrix forward(const ModelParams& params, const RowMatrix& batch) const = 0;

  // Returns loss_scale times the mean batch loss; `grad` receives its exact
  // gradient with respect to params.values.
  virtual double loss_and_gradient(const ModelParams& params, const RowMatrix& batch, LossKind kind,
                                   const Targets& targets, Vector& grad, double loss_scale = 1.0,
                                   double tau = kDefaultTemperature) const = 0;
};

} // namespace leakaudit::nn
