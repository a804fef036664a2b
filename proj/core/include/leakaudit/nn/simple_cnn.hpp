#pragma once

#include "leakaudit/nn/mlp.hpp"
#include "leakaudit/nn/model.hpp"

namespace leakaudit::nn {

struct SimpleCnnConfig {
  int in_channels = 1;
  int in_timepoints = 1;
  int conv_filters = 100;
  int kernel_width = 1;
  int hidden_units = 64;
  int n_outputs = 2;
  double ln_eps = 1e-10;

  // Kernel spans all channels and round(0.1 * fs) samples.
  static SimpleCnnConfig for_input(int channels, int timepoints, double fs, int n_outputs);
};

void validate(const SimpleCnnConfig& config);

// Layer norm over each sample's channel x time block (elementwise affine),
// full-height valid convolution, global average pooling, then a DenseHead.
//
// With no nonlinearity between convolution and pooling the pooled feature
// j equals bias_j + <W_j, S>, where S[c, k] is the mean of the normalized
// channel c over the window positions reachable by kernel tap k. Forward
// and backward use that identity instead of materializing the conv output.
class SimpleCnn final : public Model {
public:
  explicit SimpleCnn(SimpleCnnConfig config);

  const SimpleCnnConfig& config() const noexcept { return config_; }
  Eigen::Index input_size() const override;
  Eigen::Index output_size() const override { return config_.n_outputs; }
  ModelParams init_params(std::uint64_t seed) const override;

  struct Output {
    Matrix outputs; // n x n_outputs
    Matrix pooled;  // n x conv_filters
  };
  Output forward_full(const ModelParams& params, const RowMatrix& batch) const;
  Matrix forward(const ModelParams& params, const RowMatrix& batch) const override;
  double loss_and_gradient(const ModelParams& params, const RowMatrix& batch, LossKind kind, const Targets& targets,
                           Vector& grad, double loss_scale = 1.0, double tau = kDefaultTemperature) const override;

private:
  struct Cache {
    Matrix window_means; // n x (C*K)
    Vector mean, inv_std;
    DenseHead::Cache head;
  };
  Matrix pooled_features(const Vector& values, const RowMatrix& batch, Cache* cache) const;

  SimpleCnnConfig config_;
  DenseHead head_;
  std::vector<ParamSlice> slices_;
  Eigen::Index size_ = 0;
  ParamSlice ln_w_, ln_b_, conv_w_, conv_b_;
};

} // namespace leakaudit::nn
