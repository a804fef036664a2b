#pragma once

#include "leakaudit/nn/params.hpp"

#include <span>
#include <vector>

namespace leakaudit::nn {

enum class LossKind { cross_entropy, cosine, infonce };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

inline constexpr double kDefaultTemperature = 0.07;

// Targets for one batch or a whole dataset: class ids for cross-entropy,
// one embedding row per sample for the retrieval losses.
struct Targets {
  std::vector<int> classes;
  Matrix embeddings;

  Targets subset(std::span<const std::size_t> rows) const;
};

// Mean loss over the batch and its gradient with respect to the outputs.
struct LossResult {
  double loss = 0.0;
  Matrix grad;
};

std::vector<double> softmax(std::span<const double> logits);
double cross_entropy(std::span<const double> logits, int cls);

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> classes);
LossResult cosine_loss(const Matrix& pred, const Matrix& target);
LossResult infonce_loss(const Matrix& pred, const Matrix& target, double tau = kDefaultTemperature);

LossResult evaluate_loss(LossKind kind, const Matrix& outputs, const Targets& targets,
                         double tau = kDefaultTemperature);

} // namespace leakaudit::nn
