#pragma once

// Random prediction and p-value tables checked against brute-force
// recomputation.

#include "leakaudit/metrics.hpp"
#include "leakaudit/random.hpp"
#include "leakaudit/stats.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace metric_tables {

struct Tally {
  std::map<std::string, int> mismatches{{"top1", 0}, {"top5", 0}, {"rank_acc", 0}, {"acc_near", 0},
                                        {"acc_7th", 0}, {"bonferroni", 0}, {"bh_fdr", 0}};
  int tables = 0;

  int total() const {
    int t = 0;
    for (const auto& [k, v] : mismatches) t += v;
    return t;
  }
};

inline void check_retrieval(leakaudit::Rng& rng, Tally& tally) {
  using namespace leakaudit;
  const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 30));
  const auto c = static_cast<Eigen::Index>(2 + uniform_index(rng, 40));
  // Integer-valued scores produce plenty of ties.
  const bool coarse = uniform_index(rng, 2) == 0;
  Eigen::MatrixXd scores(n, c);
  std::vector<int> targets;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      scores(i, j) = coarse ? static_cast<double>(uniform_index(rng, 5)) : uniform_unit(rng);
    }
    targets.push_back(static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c))));
  }
  const auto m = retrieval_metrics(scores, targets);
  long top1 = 0, top5 = 0;
  long rank_num = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row;
    for (Eigen::Index j = 0; j < c; ++j) row.push_back(scores(i, j));
    const auto t = static_cast<std::size_t>(targets[static_cast<std::size_t>(i)]);
    top1 += oracle::in_top_k(row, t, 1);
    top5 += oracle::in_top_k(row, t, 5);
    rank_num += static_cast<long>(c) - static_cast<long>(oracle::rank_by_sort(row, t));
  }
  const double nd = static_cast<double>(n);
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  tally.mismatches["top1"] += !same(m.top1_pct, 100.0 * static_cast<double>(top1) / nd);
  tally.mismatches["top5"] += !same(m.top5_pct, 100.0 * static_cast<double>(top5) / nd);
  tally.mismatches["rank_acc"] +=
      !same(m.rank_acc_pct, 100.0 * static_cast<double>(rank_num) / (static_cast<double>(c - 1) * nd));
}

inline void check_domains(leakaudit::Rng& rng, Tally& tally) {
  using namespace leakaudit;
  const int domains = 7 + static_cast<int>(uniform_index(rng, 40));
  std::vector<int> presentation(static_cast<std::size_t>(domains));
  for (int d = 0; d < domains; ++d) presentation[static_cast<std::size_t>(d)] = d;
  shuffle_in_place(presentation, rng);
  const auto n = 1 + uniform_index(rng, 200);
  std::vector<int> predicted, truth;
  for (std::uint64_t i = 0; i < n; ++i) {
    truth.push_back(static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(domains))));
    predicted.push_back(static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(domains))));
  }
  tally.mismatches["acc_near"] += acc_near_pct(predicted, truth, presentation) != oracle::acc_near(predicted, truth, presentation);
  const int seventh = presentation[6];
  const auto hits = std::count(predicted.begin(), predicted.end(), seventh);
  tally.mismatches["acc_7th"] += acc_domain_pct(predicted, seventh) != 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

inline void check_pvalues(leakaudit::Rng& rng, Tally& tally) {
  using namespace leakaudit;
  const auto m = 1 + uniform_index(rng, 300);
  std::vector<double> p;
  for (std::uint64_t i = 0; i < m; ++i) {
    const double u = uniform_unit(rng);
    // Mix of tiny, moderate and repeated values.
    p.push_back(uniform_index(rng, 4) == 0 ? u * 1e-4 : (uniform_index(rng, 10) == 0 && !p.empty() ? p.back() : u));
  }
  const auto bonf = bonferroni(p);
  bool bonf_ok = bonf.size() == p.size();
  for (std::size_t i = 0; bonf_ok && i < p.size(); ++i) bonf_ok = bonf[i] == std::min(1.0, p[i] * static_cast<double>(m));
  tally.mismatches["bonferroni"] += !bonf_ok;

  const double q = std::vector<double>{0.01, 0.05, 0.1}[uniform_index(rng, 3)];
  const auto fdr = bh_fdr(p, q);
  const auto reject = oracle::bh_reject(p, q);
  const auto adjusted = oracle::bh_adjusted(p);
  bool fdr_ok = fdr.reject == reject;
  for (std::size_t i = 0; fdr_ok && i < p.size(); ++i) fdr_ok = std::abs(fdr.adjusted[i] - adjusted[i]) <= 1e-12;
  tally.mismatches["bh_fdr"] += !fdr_ok;
}

inline Tally run(int tables, std::uint64_t seed) {
  leakaudit::Rng rng(seed);
  Tally tally;
  for (int i = 0; i < tables; ++i) {
    check_retrieval(rng, tally);
    check_domains(rng, tally);
    check_pvalues(rng, tally);
    ++tally.tables;
  }
  return tally;
}

} // namespace metric_tables
