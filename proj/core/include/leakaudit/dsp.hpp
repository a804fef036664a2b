#pragma once

#include "leakaudit/fft.hpp"
#include "leakaudit/series.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

enum class BandName { full, delta, theta, alpha, beta, low_gamma, high_gamma };

struct Band {
  BandName name = BandName::full;
  double lo = 0.0; // Hz; 0 means no high-pass stage
  double hi = 0.0; // Hz; +inf for the full band
};

std::string to_string(BandName name);
Band canonical_band(BandName name);
Band band_from_string(const std::string& name);
// full, delta, theta, alpha, beta, low_gamma, high_gamma
std::vector<Band> canonical_bands();
// False when the band's upper edge is at or above Nyquist.
bool band_available(const Band& band, double fs);

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

// Butterworth prototypes realized as cascaded second-order sections via the
// bilinear transform with prewarping. `order` must be even.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs);
std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double fs);
// Band-pass from an order-`order` low-pass prototype (2 * order poles), unit
// gain at sqrt(lo * hi) after prewarping.
std::vector<Biquad> butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs);

// Forward-backward filtering of x in place with odd-extension padding and
// steady-state initial conditions. `slowest_hz` sets the padding length.
void filtfilt(std::span<const Biquad> sections, std::span<double> x, double fs, double slowest_hz);

// Zero-phase 4th-order Butterworth band-pass (low-pass only when lo == 0).
// The full band is returned unchanged. Throws ParameterError when the band's
// upper edge is not below Nyquist.
MultichannelSeries bandpass(const MultichannelSeries& series, const Band& band);

MultichannelSeries lowpass(const MultichannelSeries& series, double cutoff_hz);

// Zero-phase low-pass at 0.4 * new_fs followed by linear interpolation onto
// round(timepoints * new_fs / fs) points. new_fs == fs returns a copy;
// upsampling is rejected.
MultichannelSeries resample(const MultichannelSeries& series, double new_fs);

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> logspace(double lo, double hi, std::size_t n);

struct WaveletSpec {
  std::vector<double> freqs;  // Hz
  double n_cycles = 7.0;
  std::vector<double> lags_s; // ascending
  double analysis_fs = 200.0;

  // 95 linear frequencies on 1..95 Hz, 200 log-spaced lags on 0.5..500 s.
  static WaveletSpec defaults();
};

void validate(const WaveletSpec& spec);

struct Envelope {
  std::vector<double> values; // same length as the input
  std::size_t edge = 0;       // samples at each end to exclude

  std::span<const double> interior() const;
};

// Complex Morlet wavelet with Gaussian width sigma_t = n_cycles / (2*pi*f),
// normalized so that a unit-amplitude sinusoid at f has envelope 1. The
// edge is one wavelet half-length (5 sigma_t).
class MorletTransform {
public:
  MorletTransform(std::span<const double> signal, double fs);

  Envelope envelope(double freq_hz, double n_cycles) const;
  std::size_t size() const noexcept { return n_; }
  double fs() const noexcept { return fs_; }

private:
  std::size_t n_ = 0;
  std::size_t n_fft_ = 0;
  double fs_ = 0.0;
  std::vector<fft::Complex> spectrum_;
};

Envelope morlet_envelope(std::span<const double> signal, double fs, double freq_hz, double n_cycles);

std::size_t morlet_half_length(double freq_hz, double n_cycles, double fs);

// Round lags in seconds to the nearest sample, keeping order.
std::vector<std::size_t> lags_to_samples(std::span<const double> lags_s, double fs);

// Pearson correlation between x[t] and x[t + lag] over the overlap, for each
// lag in samples. Lag 0 yields exactly 1. Requires x.size() > max lag + 2;
// throws NumericalError when either overlapping window is constant.
std::vector<double> acf_at_lags(std::span<const double> x, std::span<const std::size_t> lags);

std::vector<double> acf_envelope(std::span<const double> envelope, double fs, std::span<const double> lags_s);

} // namespace leakaudit
