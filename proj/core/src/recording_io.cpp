#include "leakaudit/recording_io.hpp"

#include "leakaudit/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace leakaudit {

namespace {

constexpr const char* kTerminator = "---";

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::string sanitize_origin(const std::string& origin) {
  std::string out = origin;
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

FormatError header_error(const std::string& msg) {
  return FormatError(FormatError::Kind::malformed_header, "recording header: " + msg);
}

long long parse_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw header_error("missing key '" + key + "'");
  long long v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw header_error("bad integer for '" + key + "': '" + s + "'");
  }
  return v;
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw header_error("missing key '" + key + "'");
  std::istringstream is(it->second);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  if (is.fail() || !is.eof()) throw header_error("bad number for '" + key + "': '" + it->second + "'");
  return v;
}

} // namespace

void write_recording(const MultichannelSeries& series, std::ostream& out) {
  validate(series);
  std::ostringstream header;
  header.imbue(std::locale::classic());
  header << "format_version=1\n"
         << "channels=" << series.channels() << "\n"
         << "fs=" << std::setprecision(17) << series.fs << "\n"
         << "timepoints=" << series.timepoints() << "\n"
         << "dtype=float32le\n"
         << "origin=" << sanitize_origin(series.origin) << "\n"
         << kTerminator << "\n";
  const std::string h = header.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));

  std::vector<std::uint32_t> row(static_cast<std::size_t>(series.timepoints()));
  for (Eigen::Index c = 0; c < series.channels(); ++c) {
    for (Eigen::Index t = 0; t < series.timepoints(); ++t) {
      const float f = static_cast<float>(series.data(c, t));
      row[static_cast<std::size_t>(t)] = to_le(std::bit_cast<std::uint32_t>(f));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw IoError("recording: write failed");
}

MultichannelSeries read_recording(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  bool terminated = false;
  for (int n = 0; n < 64 && std::getline(in, line); ++n) {
    if (line == kTerminator) {
      terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw header_error("expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!terminated) throw header_error("missing '---' terminator");

  if (parse_int(kv, "format_version") != 1) throw header_error("unsupported format_version");
  if (kv["dtype"] != "float32le") throw header_error("unsupported dtype '" + kv["dtype"] + "'");
  const long long channels = parse_int(kv, "channels");
  const long long timepoints = parse_int(kv, "timepoints");
  const double fs = parse_double(kv, "fs");
  if (channels < 1 || timepoints < 1) throw header_error("channels and timepoints must be positive");
  if (!(fs > 0.0) || !std::isfinite(fs)) throw header_error("fs must be positive");

  const auto expected = static_cast<std::size_t>(channels) * static_cast<std::size_t>(timepoints);
  std::vector<std::uint32_t> payload(expected);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(expected * sizeof(std::uint32_t)));
  const auto got = static_cast<std::size_t>(in.gcount());
  const bool trailing = in && in.peek() != std::char_traits<char>::eof();
  if (got != expected * sizeof(std::uint32_t) || trailing) {
    std::ostringstream msg;
    msg << "recording payload: expected " << expected << " float32 values (" << channels << " x "
        << timepoints << "), found " << (trailing ? "more than that" : std::to_string(got / 4) + " values");
    throw FormatError(FormatError::Kind::length_mismatch, msg.str());
  }

  MultichannelSeries series;
  series.fs = fs;
  series.origin = kv.count("origin") ? kv["origin"] : std::string();
  series.data.resize(channels, timepoints);
  std::size_t k = 0;
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index t = 0; t < timepoints; ++t, ++k) {
      const float f = std::bit_cast<float>(to_le(payload[k]));
      if (!std::isfinite(f)) {
        std::ostringstream msg;
        msg << "recording payload: non-finite value at channel " << c << ", timepoint " << t;
        throw FormatError(FormatError::Kind::non_finite_payload, msg.str());
      }
      series.data(c, t) = static_cast<double>(f);
    }
  }
  return series;
}

void save_recording(const MultichannelSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_recording(series, out);
}

MultichannelSeries load_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open recording '" + path.string() + "'");
  return read_recording(in);
}

} // namespace leakaudit
