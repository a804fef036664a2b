#include "leakaudit/nn/trainer.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/nn/adamw.hpp"
#include "leakaudit/random.hpp"

#include <cmath>
#include <limits>

namespace leakaudit::nn {

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw ParameterError("train: lr must be positive");
  if (!(c.weight_decay >= 0.0)) throw ParameterError("train: weight_decay must be non-negative");
  if (c.batch_size < 1) throw ParameterError("train: batch_size must be at least 1");
  if (c.max_epochs < 1) throw ParameterError("train: max_epochs must be at least 1");
  if (c.early_stop_patience < 1) throw ParameterError("train: early_stop_patience must be at least 1");
  if (!(c.loss_scale > 0.0)) throw ParameterError("train: loss_scale must be positive");
  if (!(c.tau > 0.0)) throw ParameterError("train: tau must be positive");
}

TrainData matrix_data(const RowMatrix& features, Targets targets) {
  TrainData d;
  d.size = static_cast<std::size_t>(features.rows());
  d.targets = std::move(targets);
  const RowMatrix* f = &features;
  d.fill = [f](std::span<const std::size_t> idx, RowMatrix& out) {
    out.resize(static_cast<Eigen::Index>(idx.size()), f->cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = f->row(static_cast<Eigen::Index>(idx[i]));
  };
  return d;
}

double validation_metric(LossKind kind, const Matrix& outputs, const Targets& targets, double tau) {
  if (kind == LossKind::cross_entropy) {
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
      Eigen::Index arg = 0;
      outputs.row(i).maxCoeff(&arg);
      if (arg == targets.classes.at(static_cast<std::size_t>(i))) ++correct;
    }
    return outputs.rows() ? static_cast<double>(correct) / static_cast<double>(outputs.rows()) : 0.0;
  }
  return -evaluate_loss(kind, outputs, targets, tau).loss;
}

Matrix predict(const Model& model, const ModelParams& params, const TrainData& data,
               std::span<const std::size_t> rows, int batch_size) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), model.output_size());
  RowMatrix batch;
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(rows.size() - start, static_cast<std::size_t>(batch_size));
    data.fill(rows.subspan(start, n), batch);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = model.forward(params, batch);
  }
  return out;
}

TrainResult train(const Model& model, const TrainConfig& config, const TrainData& data,
                  std::span<const std::size_t> train_rows, std::span<const std::size_t> val_rows, LossKind kind) {
  validate(config);
  if (train_rows.empty()) throw ParameterError("train: empty training set");
  for (auto r : train_rows) {
    if (r >= data.size) throw ParameterError("train: row index out of range");
  }
  for (auto r : val_rows) {
    if (r >= data.size) throw ParameterError("train: row index out of range");
  }

  ModelParams params = model.init_params(derive_seed(config.seed, 1));
  AdamWState state = AdamWState::zeros(params.values.size());
  const AdamWConfig opt{config.lr, config.weight_decay};
  const Targets val_targets = data.targets.subset(val_rows);

  TrainResult result{params, {}};
  result.history.best_metric = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  Vector grad(params.values.size());
  RowMatrix batch;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 2, static_cast<std::uint64_t>(epoch)));
    shuffle_in_place(order, rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, n);
      data.fill(idx, batch);
      const Targets t = data.targets.subset(idx);
      double loss = 0.0;
      try {
        loss = model.loss_and_gradient(params, batch, kind, t, grad, config.loss_scale, config.tau);
        if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
        adamw_step(params.values, grad, state, opt);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      loss_sum += loss * static_cast<double>(n);
      seen += n;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    if (!val_rows.empty()) {
      const Matrix out = predict(model, params, data, val_rows);
      rec.val_loss = evaluate_loss(kind, out, val_targets, config.tau).loss;
      rec.val_metric = validation_metric(kind, out, val_targets, config.tau);
    } else {
      rec.val_loss = rec.train_loss;
      rec.val_metric = -rec.train_loss;
    }
    if (!std::isfinite(rec.val_loss) || !params.all_finite()) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    }
    result.history.epochs.push_back(rec);

    if (rec.val_metric > result.history.best_metric) {
      result.history.best_metric = rec.val_metric;
      result.history.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      result.history.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  return result;
}

} // namespace leakaudit::nn
