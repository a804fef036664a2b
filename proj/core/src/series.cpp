#include "leakaudit/series.hpp"

#include "leakaudit/errors.hpp"

#include <cmath>

namespace leakaudit {

void validate(const MultichannelSeries& series) {
  if (!(series.fs > 0.0) || !std::isfinite(series.fs)) {
    throw ParameterError("series: sampling rate must be positive and finite");
  }
  if (series.channels() < 1 || series.timepoints() < 1) {
    throw ParameterError("series: need at least one channel and one timepoint");
  }
  if (!series.data.allFinite()) {
    throw ParameterError("series: non-finite sample value");
  }
}

} // namespace leakaudit
