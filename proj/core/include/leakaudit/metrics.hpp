#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace leakaudit {

// Row-wise argmax; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

double accuracy_pct(std::span<const int> predicted, std::span<const int> truth);

// 1 + number of candidates scoring strictly higher than the target.
std::size_t target_rank(std::span<const double> scores, std::size_t target);

// (N - r) / (N - 1) * 100.
double rank_accuracy(std::size_t rank, std::size_t n_candidates);

struct RetrievalMetrics {
  double top1_pct = 0.0;
  double top5_pct = 0.0;
  double rank_acc_pct = 0.0;
};

// scores: one row per query, one column per candidate.
RetrievalMetrics retrieval_metrics(const Eigen::MatrixXd& scores, std::span<const int> targets);

// Cosine similarity of every prediction row against every candidate row.
Eigen::MatrixXd cosine_scores(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& candidates);

// Fraction of samples whose predicted domain sits immediately before or
// after the true domain in `presentation` (domain ids in time order).
double acc_near_pct(std::span<const int> predicted_domain, std::span<const int> true_domain,
                    std::span<const int> presentation);

// Fraction of samples predicted as `domain`.
double acc_domain_pct(std::span<const int> predicted_domain, int domain);

} // namespace leakaudit
