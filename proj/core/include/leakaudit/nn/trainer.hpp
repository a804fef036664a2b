#pragma once

#include "leakaudit/nn/losses.hpp"
#include "leakaudit/nn/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace leakaudit::nn {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 64;
  int max_epochs = 50;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  double loss_scale = 1.0;
  double tau = kDefaultTemperature;
};

void validate(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = 0.0;
  bool stopped_early = false;

  bool operator==(const TrainHistory&) const = default;
};

// Writes the input rows for the given sample indices into `out` (resized
// by the callee to indices.size() x input_size).
using BatchFiller = std::function<void(std::span<const std::size_t> indices, RowMatrix& out)>;

struct TrainData {
  std::size_t size = 0;
  BatchFiller fill;
  Targets targets;
};

// View over an in-memory feature matrix; `features` must outlive the result.
TrainData matrix_data(const RowMatrix& features, Targets targets);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Accuracy in [0, 1] for cross-entropy, negative mean loss otherwise.
double validation_metric(LossKind kind, const Matrix& outputs, const Targets& targets,
                         double tau = kDefaultTemperature);

// Seeded mini-batch AdamW. The returned parameters are those of the epoch
// with the best validation metric (training loss when `val` is empty).
TrainResult train(const Model& model, const TrainConfig& config, const TrainData& data,
                  std::span<const std::size_t> train_rows, std::span<const std::size_t> val_rows, LossKind kind);

Matrix predict(const Model& model, const ModelParams& params, const TrainData& data,
               std::span<const std::size_t> rows, int batch_size = 256);

} // namespace leakaudit::nn
