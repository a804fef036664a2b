#include "leakaudit/dsp.hpp"
#include "leakaudit/errors.hpp"
#include "leakaudit/fft.hpp"
#include "leakaudit/surrogate.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace leakaudit;

namespace {

constexpr double kPi = std::numbers::pi;

MultichannelSeries tone(double f, double duration, double fs, double amplitude = 1.0) {
  MultichannelSeries s;
  s.fs = fs;
  s.data.resize(1, static_cast<Eigen::Index>(std::lround(duration * fs)));
  for (Eigen::Index t = 0; t < s.timepoints(); ++t) s.data(0, t) = amplitude * std::sin(2 * kPi * f * static_cast<double>(t) / fs);
  return s;
}

double rms(const MultichannelSeries& s, Eigen::Index skip = 0) {
  const auto r = s.data.row(0).segment(skip, s.timepoints() - 2 * skip);
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

std::vector<double> as_vector(const MultichannelSeries& s) {
  return {s.data.row(0).data(), s.data.row(0).data() + s.timepoints()};
}

double peak_frequency(std::span<const double> x, double fs) {
  const auto spec = oracle::naive_dft(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k < x.size() / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  return static_cast<double>(best) * fs / static_cast<double>(x.size());
}

} // namespace

TEST(Bands, CanonicalEdges) {
  const auto bands = canonical_bands();
  ASSERT_EQ(bands.size(), 7u);
  EXPECT_EQ(canonical_band(BandName::delta).hi, 4.0);
  EXPECT_EQ(canonical_band(BandName::delta).lo, 0.0);
  EXPECT_EQ(canonical_band(BandName::beta).lo, 12.0);
  EXPECT_EQ(canonical_band(BandName::beta).hi, 32.0);
  EXPECT_EQ(canonical_band(BandName::high_gamma).lo, 55.0);
  EXPECT_EQ(canonical_band(BandName::high_gamma).hi, 95.0);
  EXPECT_EQ(band_from_string("low_gamma").name, BandName::low_gamma);
  EXPECT_THROW(band_from_string("kappa"), ParameterError);
  EXPECT_FALSE(band_available(canonical_band(BandName::high_gamma), 128.0));
  EXPECT_TRUE(band_available(canonical_band(BandName::low_gamma), 128.0));
}

TEST(Bandpass, PassesInBandTone) {
  const auto x = tone(10, 20, 200);
  const auto y = bandpass(x, canonical_band(BandName::alpha));
  EXPECT_GE(rms(y, 400), 0.9 * rms(x, 400));
}

TEST(Bandpass, RejectsOutOfBandTone) {
  const auto x = tone(10, 20, 200);
  const auto y = bandpass(x, canonical_band(BandName::delta));
  EXPECT_LE(rms(y, 400), 0.1 * rms(x, 400));
}

TEST(Bandpass, ZeroInZeroOut) {
  auto x = tone(10, 5, 200);
  x.data.setZero();
  const auto y = bandpass(x, canonical_band(BandName::beta));
  EXPECT_EQ(y.data.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(y.timepoints(), x.timepoints());
}

TEST(Bandpass, AboveNyquistNamesBandAndRate) {
  const auto x = tone(10, 5, 128);
  try {
    bandpass(x, canonical_band(BandName::high_gamma));
    FAIL();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("high_gamma"), std::string::npos) << msg;
    EXPECT_NE(msg.find("128"), std::string::npos) << msg;
  }
}

TEST(Bandpass, FullBandIsIdentity) {
  const auto x = tone(10, 5, 200);
  EXPECT_TRUE(bandpass(x, canonical_band(BandName::full)).data == x.data);
}

TEST(Bandpass, ZeroPhasePulse) {
  MultichannelSeries x;
  x.fs = 200;
  x.data = SignalMatrix::Zero(1, 2001);
  for (Eigen::Index t = 0; t < 2001; ++t) {
    const double u = static_cast<double>(t - 1000) / 20.0;
    x.data(0, t) = std::exp(-u * u);
  }
  const auto y = bandpass(x, canonical_band(BandName::delta));
  Eigen::Index peak = 0;
  y.data.row(0).maxCoeff(&peak);
  EXPECT_NEAR(static_cast<double>(peak), 1000.0, 1.0);
}

TEST(Bandpass, Linearity) {
  SurrogateSpec s;
  s.duration_s = 10;
  s.fs = 200;
  s.seed = 1;
  const auto a = synth(s);
  s.seed = 2;
  const auto b = synth(s);
  MultichannelSeries mix = a;
  mix.data = 2.5 * a.data - 0.75 * b.data;
  const Band band = canonical_band(BandName::theta);
  const auto lhs = bandpass(mix, band).data;
  const SignalMatrix rhs = 2.5 * bandpass(a, band).data - 0.75 * bandpass(b, band).data;
  EXPECT_LE((lhs - rhs).norm(), 1e-9 * rhs.norm());
}

TEST(Resample, LengthArithmetic) {
  const auto x = tone(5, 60, 1000);
  const auto y = resample(x, 128);
  EXPECT_EQ(y.timepoints(), 7680);
  EXPECT_DOUBLE_EQ(y.fs, 128.0);
}

TEST(Resample, TonePeakSurvives) {
  const auto y = resample(tone(5, 20, 1000), 200);
  EXPECT_NEAR(peak_frequency(as_vector(y), 200), 5.0, 0.1);
}

TEST(Resample, SameRateIsCopy) {
  const auto x = tone(5, 3, 100);
  const auto y = resample(x, 100);
  EXPECT_LE((y.data - x.data).norm() / x.data.norm(), 0.01);
}

TEST(Resample, PreservesRmsOfBandLimitedSignal) {
  MultichannelSeries x = tone(3, 30, 1000);
  for (Eigen::Index t = 0; t < x.timepoints(); ++t) x.data(0, t) += 0.5 * std::cos(2 * kPi * 17 * static_cast<double>(t) / 1000.0);
  const auto y = resample(x, 128);
  EXPECT_NEAR(rms(y, 128) / rms(x, 1000), 1.0, 0.02);
}

TEST(Resample, RejectsUpsampling) {
  EXPECT_THROW(resample(tone(5, 3, 100), 200), ParameterError);
}

TEST(Butterworth, UnitDcGainForLowpass) {
  const auto sections = butterworth_lowpass(4, 10.0, 200.0);
  ASSERT_EQ(sections.size(), 2u);
  double gain = 1.0;
  for (const auto& s : sections) gain *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  EXPECT_NEAR(gain, 1.0, 1e-12);
  EXPECT_THROW(butterworth_lowpass(3, 10.0, 200.0), ParameterError);
}

double response(std::span<const Biquad> sections, double f, double fs) {
  const std::complex<double> zi = std::polar(1.0, -2 * kPi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  return std::abs(h);
}

TEST(Butterworth, BandpassHalfPowerAtEdges) {
  const double fs = 200;
  const auto sections = butterworth_bandpass(4, 8.0, 12.0, fs);
  ASSERT_EQ(sections.size(), 4u);
  EXPECT_NEAR(response(sections, fs / kPi * std::atan(std::sqrt(std::tan(kPi * 8 / fs) * std::tan(kPi * 12 / fs))), fs), 1.0, 1e-9);
  EXPECT_NEAR(response(sections, 8.0, fs), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(response(sections, 12.0, fs), std::sqrt(0.5), 1e-9);
  EXPECT_LT(response(sections, 4.0, fs), 0.01);
  EXPECT_LT(response(sections, 25.0, fs), 0.01);
  EXPECT_NEAR(response(sections, 0.0, fs), 0.0, 1e-12);
  EXPECT_THROW(butterworth_bandpass(4, 12.0, 8.0, fs), ParameterError);
}

TEST(Fft, MatchesNaiveDft) {
  std::vector<double> x(30);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i * i)) + 0.1 * static_cast<double>(i);
  const auto fast = fft::forward_real(x, x.size());
  const auto slow = oracle::naive_dft(x);
  for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_LT(std::abs(fast[k] - slow[k]), 1e-9);
  const auto back = fft::inverse_real(fast, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
}

TEST(Morlet, UnitToneHasFlatEnvelope) {
  const auto x = as_vector(tone(10, 20, 200));
  const auto env = morlet_envelope(x, 200, 10, 7);
  const auto in = env.interior();
  double m = 0, q = 0;
  for (double v : in) m += v;
  m /= static_cast<double>(in.size());
  for (double v : in) q += (v - m) * (v - m);
  EXPECT_LT(std::sqrt(q / static_cast<double>(in.size())) / m, 0.05);
  EXPECT_NEAR(m, 1.0, 0.05);
  EXPECT_EQ(env.values.size(), x.size());
  EXPECT_EQ(env.edge, morlet_half_length(10, 7, 200));
}

TEST(Morlet, ZeroSignalZeroEnvelope) {
  std::vector<double> x(1000, 0.0);
  const auto env = morlet_envelope(x, 200, 20, 7);
  for (double v : env.values) EXPECT_EQ(v, 0.0);
}

TEST(Morlet, ModulatedToneEnvelopePeak) {
  const double fs = 200;
  std::vector<double> x(static_cast<std::size_t>(40 * fs));
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double ts = static_cast<double>(t) / fs;
    x[t] = (1.0 + 0.5 * std::sin(2 * kPi * 0.5 * ts)) * std::sin(2 * kPi * 20 * ts);
  }
  const auto env = morlet_envelope(x, fs, 20, 7);
  std::vector<double> in(env.interior().begin(), env.interior().end());
  double m = 0;
  for (double v : in) m += v;
  m /= static_cast<double>(in.size());
  for (double& v : in) v -= m;
  in.resize(static_cast<std::size_t>(36 * fs));
  EXPECT_NEAR(peak_frequency(in, fs), 0.5, 1.0 / 36.0 + 1e-9);
}

TEST(Morlet, RejectsNyquist) {
  std::vector<double> x(500, 1.0);
  EXPECT_THROW(morlet_envelope(x, 200, 100, 7), ParameterError);
}

TEST(Acf, LagZeroIsOne) {
  std::vector<double> x{1, 3, 2, 5, 4, 6, 2, 1};
  const std::vector<std::size_t> lags{0, 1, 2};
  const auto r = acf_at_lags(x, lags);
  EXPECT_EQ(r[0], 1.0);
  EXPECT_NEAR(r[1], oracle::lagged_corr(x, 1), 1e-12);
  EXPECT_NEAR(r[2], oracle::lagged_corr(x, 2), 1e-12);
}

TEST(Acf, ConstantIsDegenerate) {
  std::vector<double> x(50, 2.0);
  const std::vector<std::size_t> lags{0, 3};
  EXPECT_THROW(acf_at_lags(x, lags), NumericalError);
}

TEST(Acf, WhiteNoiseEnvelopeDecorrelates) {
  double total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SurrogateSpec s;
    s.duration_s = 60;
    s.fs = 200;
    s.seed = seed;
    const auto x = synth(s);
    const auto env = morlet_envelope(std::span<const double>(x.data.row(0).data(), 12000), 200, 20, 7);
    const std::vector<double> lags{10.0};
    total += acf_envelope(env.interior(), 200, lags)[0];
  }
  EXPECT_LT(std::abs(total / 10.0), 0.05);
}

TEST(Acf, MatchesBruteForceOnModulatedEnvelope) {
  SurrogateSpec s;
  s.duration_s = 120;
  s.fs = 200;
  s.seed = 3;
  s.modulated_tone = ModulatedToneSpec{};
  const auto x = synth(s);
  const auto env = morlet_envelope(std::span<const double>(x.data.row(0).data(), 24000), 200, 10, 7);
  const std::vector<double> lags_s{0.5, 2.0, 7.3, 20.0};
  const auto r = acf_envelope(env.interior(), 200, lags_s);
  const auto in = env.interior();
  for (std::size_t i = 0; i < lags_s.size(); ++i) {
    const auto lag = static_cast<std::size_t>(std::lround(lags_s[i] * 200));
    EXPECT_NEAR(r[i], oracle::lagged_corr(in, lag), 1e-9);
  }
}

TEST(Acf, SignFlipSymmetry) {
  std::vector<double> x(400);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.05 * static_cast<double>(i)) + 0.3 * std::cos(0.31 * static_cast<double>(i * i));
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  std::vector<double> flipped(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) flipped[i] = m - (x[i] - m);
  const std::vector<std::size_t> lags{1, 5, 40};
  const auto a = acf_at_lags(x, lags);
  const auto b = acf_at_lags(flipped, lags);
  for (std::size_t i = 0; i < lags.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(WaveletSpec, DefaultsAndValidation) {
  const auto w = WaveletSpec::defaults();
  EXPECT_EQ(w.freqs.size(), 95u);
  EXPECT_EQ(w.lags_s.size(), 200u);
  EXPECT_DOUBLE_EQ(w.freqs.front(), 1.0);
  EXPECT_DOUBLE_EQ(w.freqs.back(), 95.0);
  EXPECT_NEAR(w.lags_s.front(), 0.5, 1e-12);
  EXPECT_NEAR(w.lags_s.back(), 500.0, 1e-9);
  EXPECT_EQ(w.n_cycles, 7.0);
  EXPECT_EQ(w.analysis_fs, 200.0);
  auto bad = w;
  bad.n_cycles = 2;
  EXPECT_THROW(validate(bad), ParameterError);
  bad = w;
  bad.freqs.push_back(100.0);
  EXPECT_THROW(validate(bad), ParameterError);
  bad = w;
  std::swap(bad.lags_s[0], bad.lags_s[1]);
  EXPECT_THROW(validate(bad), ParameterError);
}
