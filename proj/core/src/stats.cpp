#include "leakaudit/stats.hpp"

#include "leakaudit/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace leakaudit {

double mean(std::span<const double> x) {
  if (x.empty()) throw ParameterError("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double sem(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return sample_sd(x) / std::sqrt(static_cast<double>(x.size()));
}

double binomial_se(double p, std::size_t n) {
  if (n == 0) throw ParameterError("binomial_se: n must be positive");
  if (p < 0.0 || p > 1.0) throw ParameterError("binomial_se: p must lie in [0, 1]");
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

TTestResult one_sample_ttest(std::span<const double> values, double mu0, Alternative alt) {
  if (values.size() < 2) throw ParameterError("t-test: need at least 2 values");
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("t-test: non-finite value");
  }
  TTestResult r;
  r.df = values.size() - 1;
  r.mean = mean(values);
  r.sem = sem(values);
  if (!(r.sem > 0.0)) throw NumericalError("t-test: zero variance sample");
  r.t = (r.mean - mu0) / r.sem;
  const boost::math::students_t dist(static_cast<double>(r.df));
  switch (alt) {
    case Alternative::greater: r.p = boost::math::cdf(boost::math::complement(dist, r.t)); break;
    case Alternative::less: r.p = boost::math::cdf(dist, r.t); break;
    case Alternative::two_sided: r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))); break;
  }
  r.p = std::clamp(r.p, 0.0, 1.0);
  return r;
}

namespace {
void check_p(std::span<const double> p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("p-values must lie in [0, 1]");
  }
}
} // namespace

std::vector<double> bonferroni(std::span<const double> p, std::size_t m) {
  check_p(p);
  if (m == 0) m = p.size();
  if (m < p.size()) throw ParameterError("bonferroni: m smaller than the number of p-values");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, p[i] * static_cast<double>(m));
  return out;
}

FdrResult bh_fdr(std::span<const double> p, double q) {
  check_p(p);
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("bh_fdr: q must lie in (0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  FdrResult r;
  r.adjusted.assign(m, 1.0);
  r.reject.assign(m, false);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const std::size_t i = order[k];
    running = std::min(running, p[i] * static_cast<double>(m) / static_cast<double>(k + 1));
    r.adjusted[i] = std::min(1.0, running);
  }
  for (std::size_t i = 0; i < m; ++i) r.reject[i] = r.adjusted[i] <= q;
  return r;
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("spearman: need two equal-length samples of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericalError("spearman: constant input");
  return sxy / std::sqrt(sxx * syy);
}

} // namespace leakaudit
