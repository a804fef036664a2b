#pragma once

#include "leakaudit/dsp.hpp"
#include "leakaudit/series.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace leakaudit {

// One subject's input: a single continuous recording (split into equal
// segments) or several trials used as given.
struct LrtcSubject {
  int subject_id = 0;
  std::vector<MultichannelSeries> recordings;
};

struct LrtcOptions {
  int n_segments = 5;  // applies when a subject has a single recording
  double q = 0.01;     // FDR level of the significance mask
  int jobs = 1;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct AcfMatrix {
  Eigen::MatrixXd values;   // frequencies x lags, mean over units
  std::vector<double> freqs;
  std::vector<double> lags_s;             // realized lags (samples / analysis_fs)
  std::vector<std::size_t> lag_samples;
  std::size_t n_units = 0;
  Eigen::MatrixXd p_values; // BH-adjusted; empty until significance is run
  BoolMatrix reject;
  std::size_t degenerate_cells = 0;
};

struct UnitAcf {
  int subject_id = 0;
  int channel = 0;
  Eigen::MatrixXd values; // mean over the unit's segments
};

struct LrtcResult {
  AcfMatrix grand;
  std::vector<UnitAcf> units;
  std::vector<std::string> notices;
};

// Resamples to spec.analysis_fs, then per (subject, channel, segment,
// frequency) computes the Morlet envelope, drops its edges and correlates it
// with itself at every lag. Per-unit matrices average the segments; the
// grand matrix averages the units. Requires every segment to last at least
// twice the largest lag.
LrtcResult lrtc_map(std::span<const LrtcSubject> subjects, const WaveletSpec& spec, const LrtcOptions& options = {});

struct SignificanceResult {
  Eigen::MatrixXd p_raw;
  Eigen::MatrixXd p_adjusted;
  BoolMatrix reject;
  BoolMatrix degenerate; // zero variance across units; p set to 1
};

// Per cell, one-sided one-sample t-test of the unit values against 0, then
// BH-FDR across all cells at level q.
SignificanceResult lrtc_significance(std::span<const Eigen::MatrixXd> per_unit, double q = 0.01);

// Runs lrtc_significance on the result's units and stores it in `grand`.
void attach_significance(LrtcResult& result, double q = 0.01);

// <stem>_acf.csv, <stem>_pvalues.csv, <stem>_mask.csv and <stem>.json.
// CSV rows are frequencies, columns lags.
void write_lrtc_outputs(const LrtcResult& result, const std::filesystem::path& dir, const std::string& stem = "lrtc");

} // namespace leakaudit
