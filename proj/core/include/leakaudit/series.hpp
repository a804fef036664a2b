#pragma once

#include <Eigen/Core>

#include <string>

namespace leakaudit {

// Channels are rows so that each channel is contiguous in memory.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MultichannelSeries {
  SignalMatrix data; // channels x timepoints
  double fs = 0.0;   // Hz
  std::string origin;

  Eigen::Index channels() const noexcept { return data.rows(); }
  Eigen::Index timepoints() const noexcept { return data.cols(); }
  double duration_s() const noexcept { return fs > 0.0 ? static_cast<double>(data.cols()) / fs : 0.0; }
};

// Throws ParameterError unless fs > 0, the matrix is non-empty and every
// value is finite.
void validate(const MultichannelSeries& series);

} // namespace leakaudit
