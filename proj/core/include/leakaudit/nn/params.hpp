#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace leakaudit::nn {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ParamSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;

  Eigen::Index size() const noexcept { return rows * cols; }
  bool operator==(const ParamSlice&) const = default;
};

// Flat parameter vector; each slice is a row-major matrix inside `values`.
struct ModelParams {
  Vector values;
  std::vector<ParamSlice> slices;

  const ParamSlice& slice(const std::string& name) const;
  Eigen::Map<RowMatrix> matrix(const std::string& name);
  Eigen::Map<const RowMatrix> matrix(const std::string& name) const;
  bool all_finite() const { return values.allFinite(); }
};

// Appends slices in order and returns the total size.
class LayoutBuilder {
public:
  Eigen::Index add(const std::string& name, Eigen::Index rows, Eigen::Index cols = 1);
  std::vector<ParamSlice> slices() const { return slices_; }
  Eigen::Index size() const noexcept { return size_; }

private:
  std::vector<ParamSlice> slices_;
  Eigen::Index size_ = 0;
};

inline Eigen::Map<const RowMatrix> view(const Vector& values, const ParamSlice& s) {
  return {values.data() + s.offset, s.rows, s.cols};
}
inline Eigen::Map<RowMatrix> view(Vector& values, const ParamSlice& s) {
  return {values.data() + s.offset, s.rows, s.cols};
}

// Checkpoint directory: params.json (slice manifest) and params.bin
// (little-endian float64 payload in slice order).
void save_params(const ModelParams& params, const std::filesystem::path& dir);
ModelParams load_params(const std::filesystem::path& dir);

} // namespace leakaudit::nn
