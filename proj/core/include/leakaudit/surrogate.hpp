#pragma once

#include "leakaudit/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

enum class SurrogateKind { white, ar1, powerlaw, composite };

std::string to_string(SurrogateKind kind);
SurrogateKind surrogate_kind_from_string(const std::string& name);

// Mains interference whose amplitude drifts as a 0.01 Hz sinusoid:
// a(t) = amplitude * (1 + amplitude_drift_scale * sin(2*pi*0.01*t)).
struct LineNoiseSpec {
  double f0 = 50.0;
  double amplitude = 0.5;
  double amplitude_drift_scale = 0.5;
};

// Weights of the composite kind (white + powerlaw); line noise comes from
// SurrogateSpec::line_noise.
struct CompositeWeights {
  double white = 0.5;
  double powerlaw = 1.0;
};

// Oscillation at `freq_hz` whose log-amplitude follows a unit-variance
// AR(1) process with correlation time tau_s; one independent modulation per
// channel. Used to plant long-range envelope correlations.
struct ModulatedToneSpec {
  double freq_hz = 10.0;
  double amplitude = 1.0;
  double depth = 0.5;
  double tau_s = 20.0;
};

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::white;
  double phi = 0.9;   // ar1 coefficient, |phi| < 1
  double beta = 1.0;  // powerlaw exponent, PSD ~ f^-beta
  double duration_s = 60.0;
  double fs = 200.0;
  int channels = 1;
  double channel_mixing = 0.0; // weight of the shared component, [0, 1]
  std::optional<LineNoiseSpec> line_noise;
  CompositeWeights composite;
  std::optional<ModulatedToneSpec> modulated_tone;
  std::uint64_t seed = 0;

  // duration_s * fs, validated to be an integer >= 2.
  Eigen::Index length() const;
};

void validate(const SurrogateSpec& spec);

// Deterministic for a given spec (including seed). Every base component is
// unit-variance per channel; channel c is sqrt(1-m)*independent_c +
// sqrt(m)*shared.
MultichannelSeries synth(const SurrogateSpec& spec);

struct TimeWindow {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct NarrowbandComponent {
  double freq_hz = 0.0;
  double amplitude = 0.0;
  double phase = 0.0; // radians, relative to t = 0 of the recording
};

// The latent domain factor made explicit: inside its window the signal
// becomes x * (1 + s*gain) + s*offset + s*narrowband(t) with s = strength.
struct DomainSignature {
  int domain_id = 0;
  Eigen::VectorXd gain;
  Eigen::VectorXd offset;
  NarrowbandComponent narrowband;
  double strength = 0.0;
};

// Samples outside every window are copied unchanged; windows with zero
// strength are left untouched as well. Throws ParameterError on overlapping
// or out-of-range windows and on count or channel mismatches.
MultichannelSeries inject_domain_signatures(const MultichannelSeries& series,
                                            std::span<const TimeWindow> windows,
                                            std::span<const DomainSignature> signatures);

struct SignatureScale {
  double gain_sd = 0.1;
  double offset_sd = 0.15;
  double narrowband_amplitude = 0.3;
  double narrowband_lo_hz = 2.0;
  double narrowband_hi_hz = 40.0;
};

// Seeded random signatures, one per domain; gain and offset entries are
// normal with the given standard deviations, narrowband frequency uniform in
// [lo, hi] and phase uniform.
std::vector<DomainSignature> random_signatures(int n_domains, int channels, const SignatureScale& scale,
                                               double strength, std::uint64_t seed);

} // namespace leakaudit
