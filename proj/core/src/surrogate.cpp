#include "leakaudit/surrogate.hpp"

#include "leakaudit/errors.hpp"
#include "leakaudit/fft.hpp"
#include "leakaudit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace leakaudit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLineDriftHz = 0.01;

enum StreamTag : std::uint64_t { kWhite = 1, kAr1 = 2, kPowerlaw = 3, kLine = 4, kTone = 5, kToneMod = 6 };

std::vector<double> white_stream(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = normal(rng);
  return x;
}

// Stationary unit-variance AR(1): innovations have variance 1 - phi^2.
std::vector<double> ar1_stream(Eigen::Index n, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation_sd = std::sqrt(1.0 - phi * phi);
  std::vector<double> x(static_cast<std::size_t>(n));
  x[0] = normal(rng);
  for (std::size_t t = 1; t < x.size(); ++t) x[t] = phi * x[t - 1] + innovation_sd * normal(rng);
  return x;
}

void normalize_unit_variance(std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double& v : x) {
    v -= mean;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / n);
  if (sd > 0.0) {
    for (double& v : x) v /= sd;
  }
}

// Spectral shaping: |X(f)| ~ f^(-beta/2), uniform random phases, DC zeroed.
std::vector<double> powerlaw_stream(Eigen::Index n, double fs, double beta, std::uint64_t seed) {
  Rng rng(seed);
  const auto size = static_cast<std::size_t>(n);
  std::vector<fft::Complex> spectrum(size / 2 + 1, fft::Complex(0.0, 0.0));
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    const double amp = std::pow(f, -beta / 2.0);
    const double phase = kTwoPi * uniform_unit(rng);
    spectrum[k] = std::polar(amp, phase);
  }
  if (size % 2 == 0) spectrum.back() = fft::Complex(spectrum.back().real(), 0.0);
  std::vector<double> x = fft::inverse_real(spectrum, size);
  normalize_unit_variance(x);
  return x;
}

std::vector<double> base_stream(const SurrogateSpec& spec, Eigen::Index n, std::uint64_t stream) {
  switch (spec.kind) {
    case SurrogateKind::white:
      return white_stream(n, derive_seed(spec.seed, kWhite, stream));
    case SurrogateKind::ar1:
      return ar1_stream(n, spec.phi, derive_seed(spec.seed, kAr1, stream));
    case SurrogateKind::powerlaw:
      return powerlaw_stream(n, spec.fs, spec.beta, derive_seed(spec.seed, kPowerlaw, stream));
    case SurrogateKind::composite: {
      auto w = white_stream(n, derive_seed(spec.seed, kWhite, stream));
      auto p = powerlaw_stream(n, spec.fs, spec.beta, derive_seed(spec.seed, kPowerlaw, stream));
      for (std::size_t t = 0; t < w.size(); ++t) w[t] = spec.composite.white * w[t] + spec.composite.powerlaw * p[t];
      return w;
    }
  }
  throw ParameterError("surrogate: unknown kind");
}

} // namespace

std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::white: return "white";
    case SurrogateKind::ar1: return "ar1";
    case SurrogateKind::powerlaw: return "powerlaw";
    case SurrogateKind::composite: return "composite";
  }
  return "unknown";
}

SurrogateKind surrogate_kind_from_string(const std::string& name) {
  if (name == "white") return SurrogateKind::white;
  if (name == "ar1") return SurrogateKind::ar1;
  if (name == "powerlaw") return SurrogateKind::powerlaw;
  if (name == "composite") return SurrogateKind::composite;
  throw ParameterError("surrogate: unknown kind '" + name + "'");
}

Eigen::Index SurrogateSpec::length() const {
  const double n = duration_s * fs;
  const double rounded = std::round(n);
  if (!std::isfinite(n) || std::abs(n - rounded) > 1e-6 * std::max(1.0, std::abs(n))) {
    std::ostringstream msg;
    msg << "surrogate: duration_s * fs = " << n << " is not an integer sample count";
    throw ParameterError(msg.str());
  }
  return static_cast<Eigen::Index>(rounded);
}

void validate(const SurrogateSpec& spec) {
  if (!(spec.fs > 0.0) || !std::isfinite(spec.fs)) throw ParameterError("surrogate: fs must be positive");
  if (!(spec.duration_s > 0.0)) throw ParameterError("surrogate: duration_s must be positive");
  if (spec.length() < 2) throw ParameterError("surrogate: duration_s * fs must be at least 2 samples");
  if (spec.channels < 1) throw ParameterError("surrogate: channels must be >= 1");
  if (!(spec.channel_mixing >= 0.0 && spec.channel_mixing <= 1.0)) {
    throw ParameterError("surrogate: channel_mixing must lie in [0, 1]");
  }
  if (spec.kind == SurrogateKind::ar1 && !(std::abs(spec.phi) < 1.0)) {
    throw ParameterError("surrogate: ar1 requires |phi| < 1");
  }
  if ((spec.kind == SurrogateKind::powerlaw || spec.kind == SurrogateKind::composite) && !(spec.beta >= 0.0)) {
    throw ParameterError("surrogate: powerlaw requires beta >= 0");
  }
  if (spec.line_noise) {
    const auto& ln = *spec.line_noise;
    if (!(ln.f0 > 0.0 && ln.f0 < spec.fs / 2.0)) throw ParameterError("surrogate: line noise f0 must lie below Nyquist");
    if (!std::isfinite(ln.amplitude) || !std::isfinite(ln.amplitude_drift_scale)) {
      throw ParameterError("surrogate: line noise parameters must be finite");
    }
  }
  if (spec.modulated_tone) {
    const auto& tone = *spec.modulated_tone;
    if (!(tone.freq_hz > 0.0 && tone.freq_hz < spec.fs / 2.0)) {
      throw ParameterError("surrogate: modulated tone frequency must lie below Nyquist");
    }
    if (!(tone.tau_s > 0.0)) throw ParameterError("surrogate: modulated tone tau_s must be positive");
  }
}

MultichannelSeries synth(const SurrogateSpec& spec) {
  validate(spec);
  const Eigen::Index n = spec.length();
  MultichannelSeries out;
  out.fs = spec.fs;
  out.origin = "surrogate:" + to_string(spec.kind) + ":seed=" + std::to_string(spec.seed);
  out.data.resize(spec.channels, n);

  const double w_indep = std::sqrt(1.0 - spec.channel_mixing);
  const double w_shared = std::sqrt(spec.channel_mixing);
  std::vector<double> shared;
  if (spec.channel_mixing > 0.0) shared = base_stream(spec, n, static_cast<std::uint64_t>(spec.channels));
  for (int c = 0; c < spec.channels; ++c) {
    const auto indep = base_stream(spec, n, static_cast<std::uint64_t>(c));
    for (Eigen::Index t = 0; t < n; ++t) {
      double v = w_indep * indep[static_cast<std::size_t>(t)];
      if (!shared.empty()) v += w_shared * shared[static_cast<std::size_t>(t)];
      out.data(c, t) = v;
    }
  }

  if (spec.modulated_tone) {
    const auto& tone = *spec.modulated_tone;
    const double phi = std::exp(-1.0 / (tone.tau_s * spec.fs));
    for (int c = 0; c < spec.channels; ++c) {
      const auto mod = ar1_stream(n, phi, derive_seed(spec.seed, kToneMod, static_cast<std::uint64_t>(c)));
      Rng rng(derive_seed(spec.seed, kTone, static_cast<std::uint64_t>(c)));
      const double phase = kTwoPi * uniform_unit(rng);
      for (Eigen::Index t = 0; t < n; ++t) {
        const double time = static_cast<double>(t) / spec.fs;
        const double amp = tone.amplitude * std::exp(tone.depth * mod[static_cast<std::size_t>(t)]);
        out.data(c, t) += amp * std::sin(kTwoPi * tone.freq_hz * time + phase);
      }
    }
  }

  if (spec.line_noise) {
    const auto& ln = *spec.line_noise;
    Rng rng(derive_seed(spec.seed, kLine));
    const double phase = kTwoPi * uniform_unit(rng);
    for (Eigen::Index t = 0; t < n; ++t) {
      const double time = static_cast<double>(t) / spec.fs;
      const double amp = ln.amplitude * (1.0 + ln.amplitude_drift_scale * std::sin(kTwoPi * kLineDriftHz * time));
      const double v = amp * std::sin(kTwoPi * ln.f0 * time + phase);
      out.data.col(t).array() += v;
    }
  }
  return out;
}

MultichannelSeries inject_domain_signatures(const MultichannelSeries& series,
                                            std::span<const TimeWindow> windows,
                                            std::span<const DomainSignature> signatures) {
  validate(series);
  if (windows.size() != signatures.size()) {
    throw ParameterError("inject: " + std::to_string(windows.size()) + " windows but " +
                         std::to_string(signatures.size()) + " signatures");
  }
  struct Span {
    Eigen::Index begin, end;
    std::size_t index;
  };
  std::vector<Span> spans;
  spans.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto begin = static_cast<Eigen::Index>(std::llround(windows[i].start_s * series.fs));
    const auto end = static_cast<Eigen::Index>(std::llround(windows[i].end_s * series.fs));
    if (begin < 0 || end > series.timepoints() || begin >= end) {
      throw ParameterError("inject: window " + std::to_string(i) + " is empty or outside the series");
    }
    const auto& sig = signatures[i];
    if (sig.gain.size() != series.channels() || sig.offset.size() != series.channels()) {
      throw ParameterError("inject: signature " + std::to_string(i) + " does not match the channel count");
    }
    if (!(sig.strength >= 0.0 && sig.strength <= 1.0)) throw ParameterError("inject: strength must lie in [0, 1]");
    spans.push_back({begin, end, i});
  }
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].begin < spans[i - 1].end) throw ParameterError("inject: windows overlap");
  }

  MultichannelSeries out = series;
  for (const Span& s : spans) {
    const auto& sig = signatures[s.index];
    const double g = sig.strength;
    if (g == 0.0) continue;
    const auto& nb = sig.narrowband;
    for (Eigen::Index t = s.begin; t < s.end; ++t) {
      const double time = static_cast<double>(t) / series.fs;
      const double wave = g * nb.amplitude * std::sin(kTwoPi * nb.freq_hz * time + nb.phase);
      for (Eigen::Index c = 0; c < series.channels(); ++c) {
        out.data(c, t) = series.data(c, t) * (1.0 + g * sig.gain[c]) + g * sig.offset[c] + wave;
      }
    }
  }
  return out;
}

std::vector<DomainSignature> random_signatures(int n_domains, int channels, const SignatureScale& scale,
                                               double strength, std::uint64_t seed) {
  if (n_domains < 1 || channels < 1) throw ParameterError("signatures: need positive domain and channel counts");
  if (!(scale.narrowband_hi_hz >= scale.narrowband_lo_hz)) throw ParameterError("signatures: bad narrowband range");
  std::vector<DomainSignature> out;
  out.reserve(static_cast<std::size_t>(n_domains));
  for (int d = 0; d < n_domains; ++d) {
    Rng rng(derive_seed(seed, 0x5167u, static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> normal(0.0, 1.0);
    DomainSignature sig;
    sig.domain_id = d;
    sig.strength = strength;
    sig.gain.resize(channels);
    sig.offset.resize(channels);
    for (int c = 0; c < channels; ++c) sig.gain[c] = scale.gain_sd * normal(rng);
    for (int c = 0; c < channels; ++c) sig.offset[c] = scale.offset_sd * normal(rng);
    sig.narrowband.freq_hz =
        scale.narrowband_lo_hz + (scale.narrowband_hi_hz - scale.narrowband_lo_hz) * uniform_unit(rng);
    sig.narrowband.amplitude = scale.narrowband_amplitude;
    sig.narrowband.phase = kTwoPi * uniform_unit(rng);
    out.push_back(std::move(sig));
  }
  return out;
}

} // namespace leakaudit
