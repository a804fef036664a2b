#include "leakaudit/nn/params.hpp"

#include "leakaudit/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace leakaudit::nn {

const ParamSlice& ModelParams::slice(const std::string& name) const {
  for (const auto& s : slices) {
    if (s.name == name) return s;
  }
  throw ParameterError("no parameter slice named '" + name + "'");
}

Eigen::Map<RowMatrix> ModelParams::matrix(const std::string& name) { return view(values, slice(name)); }
Eigen::Map<const RowMatrix> ModelParams::matrix(const std::string& name) const { return view(values, slice(name)); }

Eigen::Index LayoutBuilder::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  slices_.push_back({name, size_, rows, cols});
  size_ += rows * cols;
  return slices_.back().offset;
}

void save_params(const ModelParams& params, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["dtype"] = "float64le";
  manifest["size"] = params.values.size();
  for (const auto& s : params.slices) {
    manifest["slices"].push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  std::ofstream mf(dir / "params.json");
  if (!mf) throw IoError("cannot write " + (dir / "params.json").string());
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(dir / "params.bin", std::ios::binary);
  if (!bf) throw IoError("cannot write " + (dir / "params.bin").string());
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  bf.write(reinterpret_cast<const char*>(params.values.data()),
           static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!bf) throw IoError("short write to " + (dir / "params.bin").string());
}

ModelParams load_params(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "params.json");
  if (!mf) throw IoError("cannot open " + (dir / "params.json").string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed_header, std::string("checkpoint manifest: ") + e.what());
  }
  ModelParams p;
  Eigen::Index size = 0;
  try {
    if (manifest.at("dtype") != "float64le") {
      throw FormatError(FormatError::Kind::malformed_header, "checkpoint: unsupported dtype");
    }
    size = manifest.at("size").get<Eigen::Index>();
    for (const auto& s : manifest.at("slices")) {
      p.slices.push_back({s.at("name").get<std::string>(), s.at("offset").get<Eigen::Index>(),
                          s.at("rows").get<Eigen::Index>(), s.at("cols").get<Eigen::Index>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed_header, std::string("checkpoint manifest: ") + e.what());
  }
  for (const auto& s : p.slices) {
    if (s.offset < 0 || s.rows < 0 || s.cols < 0 || s.offset + s.size() > size) {
      throw FormatError(FormatError::Kind::malformed_header, "checkpoint: slice '" + s.name + "' out of range");
    }
  }
  std::ifstream bf(dir / "params.bin", std::ios::binary | std::ios::ate);
  if (!bf) throw IoError("cannot open " + (dir / "params.bin").string());
  const auto bytes = static_cast<std::size_t>(bf.tellg());
  if (bytes != static_cast<std::size_t>(size) * sizeof(double)) {
    throw FormatError(FormatError::Kind::length_mismatch, "checkpoint: payload has " + std::to_string(bytes) +
                                                              " bytes, expected " +
                                                              std::to_string(size * 8));
  }
  bf.seekg(0);
  p.values.resize(size);
  bf.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(bytes));
  if (!p.all_finite()) throw FormatError(FormatError::Kind::non_finite_payload, "checkpoint: non-finite value");
  return p;
}

} // namespace leakaudit::nn
