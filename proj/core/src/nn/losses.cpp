#include "leakaudit/nn/losses.hpp"

#include "leakaudit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace leakaudit::nn {

namespace {

Vector row_norms(const Matrix& m) {
  Vector n = m.rowwise().norm();
  for (Eigen::Index i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !std::isfinite(n[i])) {
      throw NumericalError("loss: embedding row " + std::to_string(i) + " has zero or non-finite norm");
    }
  }
  return n;
}

void check_shapes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
    throw ParameterError("loss: prediction and target shapes differ or are empty");
  }
}

} // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::cosine: return "cosine";
    case LossKind::infonce: return "infonce";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "cosine" || name == "cs") return LossKind::cosine;
  if (name == "infonce") return LossKind::infonce;
  throw ParameterError("unknown loss '" + name + "'");
}

Targets Targets::subset(std::span<const std::size_t> rows) const {
  Targets t;
  if (!classes.empty()) {
    t.classes.reserve(rows.size());
    for (auto r : rows) t.classes.push_back(classes.at(r));
  }
  if (embeddings.size() > 0) {
    t.embeddings.resize(static_cast<Eigen::Index>(rows.size()), embeddings.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      t.embeddings.row(static_cast<Eigen::Index>(i)) = embeddings.row(static_cast<Eigen::Index>(rows[i]));
    }
  }
  return t;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ParameterError("softmax: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(std::span<const double> logits, int cls) {
  if (cls < 0 || static_cast<std::size_t>(cls) >= logits.size()) {
    throw ParameterError("cross_entropy: class " + std::to_string(cls) + " out of range for " +
                         std::to_string(logits.size()) + " outputs");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return std::log(sum) - (logits[static_cast<std::size_t>(cls)] - mx);
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> classes) {
  const Eigen::Index n = logits.rows();
  if (n == 0 || static_cast<std::size_t>(n) != classes.size()) {
    throw ParameterError("cross_entropy: batch size and class count differ");
  }
  LossResult r;
  r.grad.resize(n, logits.cols());
  std::vector<double> row(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) row[static_cast<std::size_t>(j)] = logits(i, j);
    const int cls = classes[static_cast<std::size_t>(i)];
    r.loss += cross_entropy(row, cls);
    const auto p = softmax(row);
    for (Eigen::Index j = 0; j < logits.cols(); ++j) r.grad(i, j) = p[static_cast<std::size_t>(j)];
    r.grad(i, cls) -= 1.0;
  }
  r.loss /= static_cast<double>(n);
  r.grad /= static_cast<double>(n);
  return r;
}

LossResult cosine_loss(const Matrix& pred, const Matrix& target) {
  check_shapes(pred, target);
  const Eigen::Index n = pred.rows();
  const Vector pn = row_norms(pred);
  const Vector tn = row_norms(target);
  LossResult r;
  r.grad.resize(n, pred.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd ph = pred.row(i) / pn[i];
    const Eigen::RowVectorXd th = target.row(i) / tn[i];
    const double c = ph.dot(th);
    r.loss += 1.0 - c;
    // d(1 - cos)/dp projected off the prediction direction
    r.grad.row(i) = -(th - c * ph) / (pn[i] * static_cast<double>(n));
  }
  r.loss /= static_cast<double>(n);
  return r;
}

LossResult infonce_loss(const Matrix& pred, const Matrix& target, double tau) {
  check_shapes(pred, target);
  if (!(tau > 0.0)) throw ParameterError("infonce: temperature must be positive");
  const Eigen::Index n = pred.rows();
  const Vector pn = row_norms(pred);
  const Vector tn = row_norms(target);
  const Matrix ph = pred.array().colwise() / pn.array();
  const Matrix th = target.array().colwise() / tn.array();
  const Matrix s = (ph * th.transpose()) / tau;

  LossResult r;
  Matrix ds(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = s.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) sum += std::exp(s(i, j) - mx);
    r.loss += std::log(sum) + mx - s(i, i);
    for (Eigen::Index j = 0; j < n; ++j) ds(i, j) = std::exp(s(i, j) - mx) / sum;
    ds(i, i) -= 1.0;
  }
  r.loss /= static_cast<double>(n);
  ds /= static_cast<double>(n);

  const Matrix dph = ds * th / tau;
  r.grad.resize(n, pred.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double proj = ph.row(i).dot(dph.row(i));
    r.grad.row(i) = (dph.row(i) - proj * ph.row(i)) / pn[i];
  }
  return r;
}

LossResult evaluate_loss(LossKind kind, const Matrix& outputs, const Targets& targets, double tau) {
  switch (kind) {
    case LossKind::cross_entropy: return cross_entropy_loss(outputs, targets.classes);
    case LossKind::cosine: return cosine_loss(outputs, targets.embeddings);
    case LossKind::infonce: return infonce_loss(outputs, targets.embeddings, tau);
  }
  throw ParameterError("unknown loss kind");
}

} // namespace leakaudit::nn
