#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace oracle {

std::vector<std::complex<double>> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

Psd welch(std::span<const double> x, double fs, std::size_t nperseg) {
  if (x.size() < nperseg) throw std::invalid_argument("welch: series shorter than a segment");
  std::vector<double> w(nperseg);
  for (std::size_t i = 0; i < nperseg; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nperseg));
  }
  Psd psd;
  psd.power.assign(nperseg / 2 + 1, 0.0);
  std::size_t segments = 0;
  std::vector<double> seg(nperseg);
  for (std::size_t start = 0; start + nperseg <= x.size(); start += nperseg / 2) {
    double mean = 0.0;
    for (std::size_t i = 0; i < nperseg; ++i) mean += x[start + i];
    mean /= static_cast<double>(nperseg);
    for (std::size_t i = 0; i < nperseg; ++i) seg[i] = (x[start + i] - mean) * w[i];
    const auto f = naive_dft(seg);
    for (std::size_t k = 0; k < psd.power.size(); ++k) psd.power[k] += std::norm(f[k]);
    ++segments;
  }
  for (double& p : psd.power) p /= static_cast<double>(segments);
  for (std::size_t k = 0; k < psd.power.size(); ++k) {
    psd.freqs.push_back(static_cast<double>(k) * fs / static_cast<double>(nperseg));
  }
  return psd;
}

double loglog_slope(const Psd& psd, double lo_hz, double hi_hz) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    if (psd.freqs[k] >= lo_hz && psd.freqs[k] <= hi_hz && psd.power[k] > 0.0) {
      lx.push_back(std::log10(psd.freqs[k]));
      ly.push_back(std::log10(psd.power[k]));
    }
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

double bandpower(std::span<const double> x, double fs, double lo_hz, double hi_hz, std::size_t nperseg) {
  const Psd psd = welch(x, fs, nperseg);
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    if (psd.freqs[k] >= lo_hz && psd.freqs[k] <= hi_hz) {
      sum += psd.power[k];
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double lagged_corr(std::span<const double> x, std::size_t lag) {
  return pearson(x.subspan(0, x.size() - lag), x.subspan(lag));
}

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

} // namespace

std::vector<std::vector<double>> cnn_forward(const CnnShape& s, std::span<const double> p,
                                             const std::vector<std::vector<double>>& batch, double ln_eps) {
  const std::size_t CT = static_cast<std::size_t>(s.C * s.T);
  const double* ln_w = p.data();
  const double* ln_b = ln_w + CT;
  const double* conv_w = ln_b + CT;
  const double* conv_b = conv_w + s.F * s.C * s.K;
  const double* w1 = conv_b + s.F;
  const double* b1 = w1 + s.H * s.F;
  const double* w2 = b1 + s.H;
  const double* b2 = w2 + s.O * s.H;
  const int t_out = s.T - s.K + 1;
  std::vector<std::vector<double>> outputs;
  for (const auto& x : batch) {
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(CT);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(CT);
    std::vector<double> xn(CT);
    for (std::size_t i = 0; i < CT; ++i) xn[i] = (x[i] - mu) / std::sqrt(var + ln_eps) * ln_w[i] + ln_b[i];

    std::vector<double> pooled(static_cast<std::size_t>(s.F), 0.0);
    for (int f = 0; f < s.F; ++f) {
      for (int t = 0; t < t_out; ++t) {
        double y = conv_b[f];
        for (int c = 0; c < s.C; ++c) {
          for (int k = 0; k < s.K; ++k) y += conv_w[(f * s.C + c) * s.K + k] * xn[c * s.T + t + k];
        }
        pooled[f] += y / t_out;
      }
    }
    std::vector<double> h(static_cast<std::size_t>(s.H));
    for (int j = 0; j < s.H; ++j) {
      double a = b1[j];
      for (int f = 0; f < s.F; ++f) a += w1[j * s.F + f] * pooled[f];
      h[j] = sigmoid(a);
    }
    std::vector<double> z(static_cast<std::size_t>(s.O));
    for (int o = 0; o < s.O; ++o) {
      double a = b2[o];
      for (int j = 0; j < s.H; ++j) a += w2[o * s.H + j] * h[j];
      z[o] = a;
    }
    outputs.push_back(z);
  }
  return outputs;
}

namespace {

std::vector<double> unit(const std::vector<double>& v) {
  double n = 0.0;
  for (double a : v) n += a * a;
  n = std::sqrt(n);
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] / n;
  return u;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

} // namespace

double loss_value(Loss loss, const std::vector<std::vector<double>>& out, std::span<const int> classes,
                  const std::vector<std::vector<double>>& targets, double tau) {
  const std::size_t n = out.size();
  double total = 0.0;
  if (loss == Loss::cross_entropy) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (double z : out[i]) sum += std::exp(z);
      total += -std::log(std::exp(out[i][static_cast<std::size_t>(classes[i])]) / sum);
    }
  } else if (loss == Loss::cosine) {
    for (std::size_t i = 0; i < n; ++i) total += 1.0 - dot(unit(out[i]), unit(targets[i]));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += std::exp(dot(unit(out[i]), unit(targets[j])) / tau);
      total += -std::log(std::exp(dot(unit(out[i]), unit(targets[i])) / tau) / sum);
    }
  }
  return total / static_cast<double>(n);
}

std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::size_t rank_by_sort(std::span<const double> scores, std::size_t target) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto first_equal = std::find(sorted.begin(), sorted.end(), scores[target]);
  return static_cast<std::size_t>(first_equal - sorted.begin()) + 1;
}

bool in_top_k(std::span<const double> scores, std::size_t target, std::size_t k) {
  return rank_by_sort(scores, target) <= k;
}

std::vector<bool> bh_reject(std::span<const double> p, double q) {
  const std::size_t m = p.size();
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t k_star = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (sorted[k - 1] <= static_cast<double>(k) * q / static_cast<double>(m)) k_star = k;
  }
  std::vector<bool> reject(m, false);
  if (k_star == 0) return reject;
  const double cut = sorted[k_star - 1];
  for (std::size_t i = 0; i < m; ++i) reject[i] = p[i] <= cut;
  return reject;
}

std::vector<double> bh_adjusted(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<double> adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (p[j] < p[i]) continue;
      // rank of p_j among ties is the largest position it can take
      std::size_t rank = 0;
      for (std::size_t k = 0; k < m; ++k) rank += p[k] <= p[j] ? 1 : 0;
      best = std::min(best, static_cast<double>(m) * p[j] / static_cast<double>(rank));
    }
    adj[i] = std::min(1.0, best);
  }
  return adj;
}

double acc_near(std::span<const int> predicted, std::span<const int> truth, std::span<const int> presentation) {
  int hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto pt = std::find(presentation.begin(), presentation.end(), truth[i]) - presentation.begin();
    const auto pp = std::find(presentation.begin(), presentation.end(), predicted[i]) - presentation.begin();
    if (std::abs(pt - pp) == 1) ++hits;
  }
  return 100.0 * hits / static_cast<double>(predicted.size());
}

} // namespace oracle
