#include "leakaudit/dsp.hpp"

#include "leakaudit/errors.hpp"

#include <algorithm>
#include <complex>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace leakaudit {

namespace {

constexpr int kFilterOrder = 4;
constexpr double kResampleCutoff = 0.4;
constexpr double kMorletHalfWidthSigmas = 5.0;

Biquad butterworth_section(double k, double q, bool highpass) {
  const double norm = 1.0 / (1.0 + k / q + k * k);
  Biquad s;
  if (highpass) {
    s.b0 = norm;
    s.b1 = -2.0 * norm;
    s.b2 = norm;
  } else {
    s.b0 = k * k * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
  }
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - k / q + k * k) * norm;
  return s;
}

std::vector<Biquad> butterworth(int order, double cutoff_hz, double fs, bool highpass) {
  if (order < 2 || order % 2 != 0) throw ParameterError("butterworth: order must be even and >= 2");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0)) {
    std::ostringstream msg;
    msg << "butterworth: cutoff " << cutoff_hz << " Hz must lie in (0, " << fs / 2.0 << ") Hz at fs=" << fs;
    throw ParameterError(msg.str());
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs);
  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    const double q = 1.0 / (2.0 * std::sin((2.0 * i + 1.0) * std::numbers::pi / (2.0 * order)));
    sections.push_back(butterworth_section(k, q, highpass));
  }
  return sections;
}

// Prototype low-pass poles mapped to the band, then through the bilinear
// transform. Each section carries zeros at z = +1 and z = -1 and is scaled to
// unit gain at the centre frequency.
std::vector<Biquad> butterworth_band(int order, double lo_hz, double hi_hz, double fs) {
  using C = std::complex<double>;
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * lo_hz / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * hi_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  const C centre = std::polar(1.0, 2.0 * std::atan(w0 / (2.0 * fs)));
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const C p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order));
    const C half = p * bw / 2.0;
    const C root = std::sqrt(half * half - w0 * w0);
    for (const C s : {half + root, half - root}) {
      const C z = (2.0 * fs + s) / (2.0 * fs - s);
      Biquad q;
      q.b0 = 1.0;
      q.b1 = 0.0;
      q.b2 = -1.0;
      q.a1 = -2.0 * z.real();
      q.a2 = std::norm(z);
      const C zi = 1.0 / centre;
      const double g = std::abs((1.0 - zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi));
      q.b0 /= g;
      q.b2 /= g;
      sections.push_back(q);
    }
  }
  return sections;
}

// Direct-form II transposed pass with per-section state.
void run_sections(std::span<const Biquad> sections, std::vector<double>& x, double level) {
  double u = level;
  std::vector<std::pair<double, double>> state(sections.size());
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const auto& q = sections[s];
    const double y = u * (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    state[s] = {y - q.b0 * u, q.b2 * u - q.a2 * y};
    u = y;
  }
  for (double& v : x) {
    double in = v;
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const auto& q = sections[s];
      auto& [z1, z2] = state[s];
      const double y = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * y + z2;
      z2 = q.b2 * in - q.a2 * y;
      in = y;
    }
    v = in;
  }
}

void filter_rows(SignalMatrix& data, std::span<const Biquad> sections, double fs, double slowest_hz) {
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    std::span<double> row(data.row(c).data(), static_cast<std::size_t>(data.cols()));
    filtfilt(sections, row, fs, slowest_hz);
  }
}

} // namespace

std::string to_string(BandName name) {
  switch (name) {
    case BandName::full: return "full";
    case BandName::delta: return "delta";
    case BandName::theta: return "theta";
    case BandName::alpha: return "alpha";
    case BandName::beta: return "beta";
    case BandName::low_gamma: return "low_gamma";
    case BandName::high_gamma: return "high_gamma";
  }
  return "unknown";
}

Band canonical_band(BandName name) {
  switch (name) {
    case BandName::full: return {name, 0.0, std::numeric_limits<double>::infinity()};
    case BandName::delta: return {name, 0.0, 4.0};
    case BandName::theta: return {name, 4.0, 8.0};
    case BandName::alpha: return {name, 8.0, 12.0};
    case BandName::beta: return {name, 12.0, 32.0};
    case BandName::low_gamma: return {name, 32.0, 45.0};
    case BandName::high_gamma: return {name, 55.0, 95.0};
  }
  throw ParameterError("band: unknown name");
}

Band band_from_string(const std::string& name) {
  for (const Band& b : canonical_bands()) {
    if (to_string(b.name) == name) return b;
  }
  throw ParameterError("band: unknown band '" + name + "'");
}

std::vector<Band> canonical_bands() {
  std::vector<Band> out;
  for (BandName n : {BandName::full, BandName::delta, BandName::theta, BandName::alpha, BandName::beta,
                     BandName::low_gamma, BandName::high_gamma}) {
    out.push_back(canonical_band(n));
  }
  return out;
}

bool band_available(const Band& band, double fs) {
  return band.name == BandName::full || band.hi < fs / 2.0;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs) {
  return butterworth(order, cutoff_hz, fs, false);
}

std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double fs) {
  return butterworth(order, cutoff_hz, fs, true);
}

std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs) {
  if (order < 2 || order % 2 != 0) throw ParameterError("butterworth: order must be even and >= 2");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0)) {
    std::ostringstream msg;
    msg << "butterworth: band " << lo_hz << "-" << hi_hz << " Hz must satisfy 0 < lo < hi < " << fs / 2.0 << " Hz";
    throw ParameterError(msg.str());
  }
  return butterworth_band(order, lo_hz, hi_hz, fs);
}

void filtfilt(std::span<const Biquad> sections, std::span<double> x, double fs, double slowest_hz) {
  const std::size_t n = x.size();
  if (n == 0 || sections.empty()) return;
  std::size_t pad = 3 * (2 * sections.size() + 1);
  if (slowest_hz > 0.0) pad = std::max(pad, static_cast<std::size_t>(std::ceil(3.0 * fs / slowest_hz)));
  pad = std::min(pad, n - 1);

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  run_sections(sections, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  run_sections(sections, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n),
            x.begin());
}

MultichannelSeries bandpass(const MultichannelSeries& series, const Band& band) {
  validate(series);
  if (band.name == BandName::full) return series;
  if (!(band.hi < series.fs / 2.0)) {
    std::ostringstream msg;
    msg << "bandpass: band " << to_string(band.name) << " (" << band.lo << "-" << band.hi
        << " Hz) reaches Nyquist at fs=" << series.fs << " Hz";
    throw ParameterError(msg.str());
  }
  if (!(band.lo >= 0.0 && band.lo < band.hi)) throw ParameterError("bandpass: need 0 <= lo < hi");
  MultichannelSeries out = series;
  if (band.lo > 0.0) {
    const auto bp = butterworth_bandpass(kFilterOrder, band.lo, band.hi, series.fs);
    filter_rows(out.data, bp, series.fs, band.lo);
  } else {
    const auto lp = butterworth_lowpass(kFilterOrder, band.hi, series.fs);
    filter_rows(out.data, lp, series.fs, band.hi);
  }
  return out;
}

MultichannelSeries lowpass(const MultichannelSeries& series, double cutoff_hz) {
  validate(series);
  MultichannelSeries out = series;
  auto lp = butterworth_lowpass(kFilterOrder, cutoff_hz, series.fs);
  filter_rows(out.data, lp, series.fs, cutoff_hz);
  return out;
}

MultichannelSeries resample(const MultichannelSeries& series, double new_fs) {
  validate(series);
  if (!(new_fs > 0.0)) throw ParameterError("resample: new_fs must be positive");
  if (new_fs > series.fs) {
    std::ostringstream msg;
    msg << "resample: upsampling from " << series.fs << " to " << new_fs << " Hz is not supported";
    throw ParameterError(msg.str());
  }
  if (new_fs == series.fs) return series;

  const MultichannelSeries filtered = lowpass(series, kResampleCutoff * new_fs);
  const Eigen::Index n_in = series.timepoints();
  const auto n_out = static_cast<Eigen::Index>(std::llround(static_cast<double>(n_in) * new_fs / series.fs));
  if (n_out < 1) throw ParameterError("resample: output would be empty");
  const double step = series.fs / new_fs;

  MultichannelSeries out;
  out.fs = new_fs;
  out.origin = series.origin;
  out.data.resize(series.channels(), n_out);
  for (Eigen::Index k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * step;
    auto i = static_cast<Eigen::Index>(std::floor(pos));
    double frac = pos - static_cast<double>(i);
    if (i >= n_in - 1) {
      i = n_in - 1;
      frac = 0.0;
    }
    if (frac == 0.0) {
      out.data.col(k) = filtered.data.col(i);
    } else {
      out.data.col(k) = (1.0 - frac) * filtered.data.col(i) + frac * filtered.data.col(i + 1);
    }
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > 0.0)) throw ParameterError("logspace: bounds must be positive");
  auto exps = linspace(std::log10(lo), std::log10(hi), n);
  for (double& e : exps) e = std::pow(10.0, e);
  if (n > 0) {
    exps.front() = lo;
    exps.back() = hi;
  }
  return exps;
}

WaveletSpec WaveletSpec::defaults() {
  WaveletSpec spec;
  spec.freqs = linspace(1.0, 95.0, 95);
  spec.lags_s = logspace(0.5, 500.0, 200);
  return spec;
}

void validate(const WaveletSpec& spec) {
  if (!(spec.analysis_fs > 0.0)) throw ParameterError("wavelet: analysis_fs must be positive");
  if (spec.freqs.empty() || spec.lags_s.empty()) throw ParameterError("wavelet: need frequencies and lags");
  if (!(spec.n_cycles >= 3.0)) throw ParameterError("wavelet: n_cycles must be >= 3");
  for (double f : spec.freqs) {
    if (!(f > 0.0 && f < spec.analysis_fs / 2.0)) {
      throw ParameterError("wavelet: frequency " + std::to_string(f) + " Hz is not below Nyquist");
    }
  }
  for (std::size_t i = 0; i < spec.lags_s.size(); ++i) {
    if (!(spec.lags_s[i] >= 0.0)) throw ParameterError("wavelet: lags must be non-negative");
    if (i > 0 && spec.lags_s[i] < spec.lags_s[i - 1]) throw ParameterError("wavelet: lags must be ascending");
  }
}

std::span<const double> Envelope::interior() const {
  if (2 * edge >= values.size()) return {};
  return std::span<const double>(values).subspan(edge, values.size() - 2 * edge);
}

std::size_t morlet_half_length(double freq_hz, double n_cycles, double fs) {
  const double sigma_t = n_cycles / (2.0 * std::numbers::pi * freq_hz);
  return static_cast<std::size_t>(std::ceil(kMorletHalfWidthSigmas * sigma_t * fs));
}

MorletTransform::MorletTransform(std::span<const double> signal, double fs)
    : n_(signal.size()), n_fft_(fft::next_fast_size(signal.size())), fs_(fs) {
  if (n_ == 0) throw ParameterError("morlet: empty signal");
  if (!(fs > 0.0)) throw ParameterError("morlet: fs must be positive");
  spectrum_ = fft::forward_real(signal, n_fft_);
}

Envelope MorletTransform::envelope(double freq_hz, double n_cycles) const {
  if (!(freq_hz > 0.0 && freq_hz < fs_ / 2.0)) {
    std::ostringstream msg;
    msg << "morlet: frequency " << freq_hz << " Hz must lie below Nyquist (" << fs_ / 2.0 << " Hz)";
    throw ParameterError(msg.str());
  }
  if (!(n_cycles > 0.0)) throw ParameterError("morlet: n_cycles must be positive");

  // Frequency response of the unit-sum Gaussian window times 2 (analytic).
  const double sigma_f = freq_hz / n_cycles;
  const double bin_hz = fs_ / static_cast<double>(n_fft_);
  const double reach = 10.0 * sigma_f;
  std::vector<fft::Complex> analytic(n_fft_, fft::Complex(0.0, 0.0));
  const auto k_lo = static_cast<std::size_t>(std::max(0.0, std::floor((freq_hz - reach) / bin_hz)));
  const auto k_hi = std::min(spectrum_.size() - 1, static_cast<std::size_t>(std::ceil((freq_hz + reach) / bin_hz)));
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const double d = (static_cast<double>(k) * bin_hz - freq_hz) / sigma_f;
    analytic[k] = spectrum_[k] * (2.0 * std::exp(-0.5 * d * d));
  }
  const auto z = fft::inverse_complex(analytic);

  Envelope env;
  env.values.resize(n_);
  for (std::size_t t = 0; t < n_; ++t) env.values[t] = std::abs(z[t]);
  env.edge = std::min(morlet_half_length(freq_hz, n_cycles, fs_), n_ / 2);
  return env;
}

Envelope morlet_envelope(std::span<const double> signal, double fs, double freq_hz, double n_cycles) {
  return MorletTransform(signal, fs).envelope(freq_hz, n_cycles);
}

std::vector<std::size_t> lags_to_samples(std::span<const double> lags_s, double fs) {
  std::vector<std::size_t> out;
  out.reserve(lags_s.size());
  for (double tau : lags_s) {
    if (!(tau >= 0.0)) throw ParameterError("acf: lags must be non-negative");
    out.push_back(static_cast<std::size_t>(std::llround(tau * fs)));
  }
  return out;
}

std::vector<double> acf_at_lags(std::span<const double> x, std::span<const std::size_t> lags) {
  const std::size_t n = x.size();
  std::size_t max_lag = 0;
  for (std::size_t l : lags) max_lag = std::max(max_lag, l);
  if (n <= max_lag + 2) {
    std::ostringstream msg;
    msg << "acf: series of " << n << " samples is too short for a lag of " << max_lag << " samples";
    throw ParameterError(msg.str());
  }

  double mean = 0.0, scale = 0.0;
  for (double v : x) {
    mean += v;
    scale = std::max(scale, std::abs(v));
  }
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    c[t] = x[t] - mean;
    s1[t + 1] = s1[t] + c[t];
    s2[t + 1] = s2[t] + c[t] * c[t];
  }

  // Lagged cross sums sum_t c[t] * c[t+L] for every L via |FFT|^2.
  const std::size_t n_fft = fft::next_fast_size(2 * n);
  auto spec = fft::forward_real(c, n_fft);
  for (auto& v : spec) v = fft::Complex(std::norm(v), 0.0);
  const auto cross = fft::inverse_real(spec, n_fft);

  const double floor = 1e-24 * scale * scale;
  std::vector<double> out;
  out.reserve(lags.size());
  for (std::size_t lag : lags) {
    if (lag == 0) {
      if (s2[n] / static_cast<double>(n) <= floor) throw NumericalError("acf: constant envelope, correlation undefined");
      out.push_back(1.0);
      continue;
    }
    const std::size_t m = n - lag;
    const double md = static_cast<double>(m);
    const double sa = s1[m], sb = s1[n] - s1[lag];
    const double va = s2[m] - sa * sa / md;
    const double vb = s2[n] - s2[lag] - sb * sb / md;
    if (va / md <= floor || vb / md <= floor) {
      throw NumericalError("acf: constant envelope window at lag " + std::to_string(lag) + ", correlation undefined");
    }
    const double cov = cross[lag] - sa * sb / md;
    out.push_back(std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0));
  }
  return out;
}

std::vector<double> acf_envelope(std::span<const double> envelope, double fs, std::span<const double> lags_s) {
  const auto lags = lags_to_samples(lags_s, fs);
  return acf_at_lags(envelope, lags);
}

} // namespace leakaudit
