#pragma once

#include "leakaudit/series.hpp"

#include <filesystem>
#include <iosfwd>

namespace leakaudit {

// Raw recording format:
//
//   format_version=1
//   channels=<int>
//   fs=<double>
//   timepoints=<int>
//   dtype=float32le
//   origin=<single line>
//   ---
//   <channels*timepoints little-endian float32, row-major by channel>
//
// Values are stored as float32; a series whose samples are exactly
// representable in float32 round-trips bit-exactly.
void save_recording(const MultichannelSeries& series, const std::filesystem::path& path);
MultichannelSeries load_recording(const std::filesystem::path& path);

void write_recording(const MultichannelSeries& series, std::ostream& out);
MultichannelSeries read_recording(std::istream& in);

} // namespace leakaudit
