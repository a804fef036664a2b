#include "leakaudit/nn/mlp.hpp"

#include "leakaudit/errors.hpp"

#include <cmath>

namespace leakaudit::nn {

DenseHead::DenseHead(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, std::string prefix)
    : in_(in), hidden_(hidden), out_(out), prefix_(std::move(prefix)) {
  if (in < 1 || hidden < 1 || out < 1) throw ParameterError("dense head: layer sizes must be positive");
}

void DenseHead::add_to(LayoutBuilder& layout) {
  layout.add(prefix_ + "1.weight", hidden_, in_);
  layout.add(prefix_ + "1.bias", hidden_);
  layout.add(prefix_ + "2.weight", out_, hidden_);
  layout.add(prefix_ + "2.bias", out_);
  const auto s = layout.slices();
  w1_ = s[s.size() - 4];
  b1_ = s[s.size() - 3];
  w2_ = s[s.size() - 2];
  b2_ = s[s.size() - 1];
}

void DenseHead::init(Vector& values, Rng& rng) const {
  auto fill = [&](const ParamSlice& s, double bound) {
    for (Eigen::Index i = 0; i < s.size(); ++i) values[s.offset + i] = bound * (2.0 * uniform_unit(rng) - 1.0);
  };
  const double a1 = 1.0 / std::sqrt(static_cast<double>(in_));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  fill(w1_, a1);
  fill(b1_, a1);
  fill(w2_, a2);
  fill(b2_, a2);
}

Matrix DenseHead::forward(const Vector& values, const Matrix& x, Cache* cache) const {
  if (x.cols() != in_) throw ParameterError("dense head: input width mismatch");
  const auto w1 = view(values, w1_);
  const auto b1 = view(values, b1_);
  const auto w2 = view(values, w2_);
  const auto b2 = view(values, b2_);
  Matrix h = x * w1.transpose();
  h.rowwise() += b1.col(0).transpose();
  h = h.unaryExpr([](double a) { return sigmoid(a); });
  Matrix z = h * w2.transpose();
  z.rowwise() += b2.col(0).transpose();
  if (cache) {
    cache->input = x;
    cache->hidden = std::move(h);
  }
  return z;
}

Matrix DenseHead::backward(const Vector& values, const Cache& cache, const Matrix& dout, Vector& grad) const {
  const auto w1 = view(values, w1_);
  const auto w2 = view(values, w2_);
  const Matrix& h = cache.hidden;
  view(grad, w2_) += dout.transpose() * h;
  view(grad, b2_) += dout.colwise().sum().transpose();
  const Matrix da = (dout * w2).array() * h.array() * (1.0 - h.array());
  view(grad, w1_) += da.transpose() * cache.input;
  view(grad, b1_) += da.colwise().sum().transpose();
  return da * w1;
}

Mlp2::Mlp2(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) : head_(in, hidden, out) {
  LayoutBuilder layout;
  head_.add_to(layout);
  slices_ = layout.slices();
  size_ = layout.size();
}

ModelParams Mlp2::init_params(std::uint64_t seed) const {
  ModelParams p{Vector::Zero(size_), slices_};
  Rng rng(seed);
  head_.init(p.values, rng);
  return p;
}

Matrix Mlp2::forward(const ModelParams& params, const RowMatrix& batch) const {
  return head_.forward(params.values, batch, nullptr);
}

double Mlp2::loss_and_gradient(const ModelParams& params, const RowMatrix& batch, LossKind kind,
                               const Targets& targets, Vector& grad, double loss_scale, double tau) const {
  DenseHead::Cache cache;
  const Matrix out = head_.forward(params.values, batch, &cache);
  LossResult r = evaluate_loss(kind, out, targets, tau);
  grad = Vector::Zero(size_);
  head_.backward(params.values, cache, r.grad * loss_scale, grad);
  return r.loss * loss_scale;
}

Matrix Mlp2Classifier::logits(const RowMatrix& features) const {
  if (features.cols() != mean.size()) throw ParameterError("mlp2: feature width mismatch");
  RowMatrix z = (features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  return model->forward(params, z);
}

std::vector<int> Mlp2Classifier::predict(const RowMatrix& features) const {
  const Matrix z = logits(features);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

Mlp2Classifier mlp2_train(const RowMatrix& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> val_rows, const Mlp2Config& config) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ParameterError("mlp2: feature rows and label count differ");
  }
  if (train_rows.empty()) throw ParameterError("mlp2: empty training set");
  if (!features.allFinite()) throw ParameterError("mlp2: non-finite features");
  int n_classes = 0;
  for (int l : labels) {
    if (l < 0) throw ParameterError("mlp2: negative label");
    n_classes = std::max(n_classes, l + 1);
  }

  const Eigen::Index d = features.cols();
  Mlp2Classifier clf;
  clf.mean = Vector::Zero(d);
  clf.scale = Vector::Zero(d);
  for (auto r : train_rows) clf.mean += features.row(static_cast<Eigen::Index>(r)).transpose();
  clf.mean /= static_cast<double>(train_rows.size());
  for (auto r : train_rows) {
    clf.scale += (features.row(static_cast<Eigen::Index>(r)).transpose() - clf.mean).array().square().matrix();
  }
  clf.scale = (clf.scale / static_cast<double>(train_rows.size())).array().sqrt();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(clf.scale[j] > 1e-12)) clf.scale[j] = 1.0;
  }

  const RowMatrix z = (features.rowwise() - clf.mean.transpose()).array().rowwise() / clf.scale.transpose().array();
  Targets targets;
  targets.classes.assign(labels.begin(), labels.end());
  const TrainData data = matrix_data(z, std::move(targets));
  auto model = std::make_shared<Mlp2>(d, config.hidden_units, std::max(n_classes, 2));
  TrainResult tr = train(*model, config.train, data, train_rows, val_rows, LossKind::cross_entropy);
  clf.model = std::move(model);
  clf.params = std::move(tr.params);
  clf.history = std::move(tr.history);
  return clf;
}

} // namespace leakaudit::nn
