#include "leakaudit/metrics.hpp"

#include "leakaudit/errors.hpp"

#include <cstdlib>
#include <unordered_map>

namespace leakaudit {

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, arg)) arg = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

double accuracy_pct(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw ParameterError("accuracy: prediction and truth lengths differ or are empty");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(predicted.size());
}

std::size_t target_rank(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) throw ParameterError("target_rank: target index out of range");
  std::size_t above = 0;
  for (double s : scores) above += s > scores[target];
  return above + 1;
}

double rank_accuracy(std::size_t rank, std::size_t n_candidates) {
  if (n_candidates < 2) throw ParameterError("rank_accuracy: need at least 2 candidates");
  if (rank < 1 || rank > n_candidates) throw ParameterError("rank_accuracy: rank out of range");
  return 100.0 * static_cast<double>(n_candidates - rank) / static_cast<double>(n_candidates - 1);
}

RetrievalMetrics retrieval_metrics(const Eigen::MatrixXd& scores, std::span<const int> targets) {
  if (static_cast<std::size_t>(scores.rows()) != targets.size() || targets.empty()) {
    throw ParameterError("retrieval_metrics: score rows and target count differ or are empty");
  }
  const auto n_cand = static_cast<std::size_t>(scores.cols());
  RetrievalMetrics m;
  std::vector<double> row(n_cand);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < n_cand; ++j) row[j] = scores(i, static_cast<Eigen::Index>(j));
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || static_cast<std::size_t>(t) >= n_cand) throw ParameterError("retrieval_metrics: target out of range");
    const std::size_t r = target_rank(row, static_cast<std::size_t>(t));
    m.top1_pct += r <= 1;
    m.top5_pct += r <= 5;
    m.rank_acc_pct += rank_accuracy(r, n_cand);
  }
  const double n = static_cast<double>(targets.size());
  m.top1_pct *= 100.0 / n;
  m.top5_pct *= 100.0 / n;
  m.rank_acc_pct /= n;
  return m;
}

Eigen::MatrixXd cosine_scores(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& candidates) {
  if (predictions.cols() != candidates.cols()) throw ParameterError("cosine_scores: dimension mismatch");
  const Eigen::VectorXd pn = predictions.rowwise().norm();
  const Eigen::VectorXd cn = candidates.rowwise().norm();
  Eigen::MatrixXd s = predictions * candidates.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const double d = pn[i] * cn[j];
      s(i, j) = d > 0.0 ? s(i, j) / d : 0.0;
    }
  }
  return s;
}

double acc_near_pct(std::span<const int> predicted_domain, std::span<const int> true_domain,
                    std::span<const int> presentation) {
  if (predicted_domain.size() != true_domain.size() || predicted_domain.empty()) {
    throw ParameterError("acc_near: prediction and truth lengths differ or are empty");
  }
  std::unordered_map<int, long> position;
  for (std::size_t i = 0; i < presentation.size(); ++i) position[presentation[i]] = static_cast<long>(i);
  std::size_t near = 0;
  for (std::size_t i = 0; i < predicted_domain.size(); ++i) {
    const auto p = position.find(predicted_domain[i]);
    const auto t = position.find(true_domain[i]);
    if (p == position.end() || t == position.end()) throw ParameterError("acc_near: domain missing from presentation order");
    near += std::labs(p->second - t->second) == 1;
  }
  return 100.0 * static_cast<double>(near) / static_cast<double>(predicted_domain.size());
}

double acc_domain_pct(std::span<const int> predicted_domain, int domain) {
  if (predicted_domain.empty()) throw ParameterError("acc_domain: empty predictions");
  std::size_t hit = 0;
  for (int p : predicted_domain) hit += p == domain;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(predicted_domain.size());
}

} // namespace leakaudit
