#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leakaudit {

enum class Alternative { greater, less, two_sided };

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  double mean = 0.0;
  double sem = 0.0;
};

// Student's one-sample t-test of mean(values) against mu0. Requires at
// least two values; throws NumericalError when the sample variance is zero.
TTestResult one_sample_ttest(std::span<const double> values, double mu0, Alternative alt = Alternative::greater);

// min(1, p * m); m defaults to the number of p-values.
std::vector<double> bonferroni(std::span<const double> p, std::size_t m = 0);

struct FdrResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};

// Benjamini-Hochberg step-up. adjusted[i] = min over sorted positions j >= i
// of min(1, m * p_(j) / j); reject where adjusted <= q.
FdrResult bh_fdr(std::span<const double> p, double q);

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> x);
double sem(std::span<const double> x);
// sqrt(p (1 - p) / n) for a proportion p in [0, 1].
double binomial_se(double p, std::size_t n);

// 1-based ranks; ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> x);
// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace leakaudit
