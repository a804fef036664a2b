#include "leakaudit/nn/simple_cnn.hpp"

#include "leakaudit/errors.hpp"

#include <cmath>
#include <vector>

namespace leakaudit::nn {

SimpleCnnConfig SimpleCnnConfig::for_input(int channels, int timepoints, double fs, int n_outputs) {
  SimpleCnnConfig c;
  c.in_channels = channels;
  c.in_timepoints = timepoints;
  c.kernel_width = std::max(1, static_cast<int>(std::lround(0.1 * fs)));
  c.n_outputs = n_outputs;
  return c;
}

void validate(const SimpleCnnConfig& c) {
  if (c.in_channels < 1 || c.in_timepoints < 1) throw ParameterError("cnn: input shape must be positive");
  if (c.kernel_width < 1 || c.kernel_width > c.in_timepoints) {
    throw ParameterError("cnn: kernel width " + std::to_string(c.kernel_width) + " must lie in [1, " +
                         std::to_string(c.in_timepoints) + "]");
  }
  if (c.conv_filters < 1 || c.hidden_units < 1 || c.n_outputs < 1) {
    throw ParameterError("cnn: layer widths must be positive");
  }
  if (!(c.ln_eps > 0.0)) throw ParameterError("cnn: ln_eps must be positive");
}

SimpleCnn::SimpleCnn(SimpleCnnConfig config) : config_(config) {
  validate(config_);
  const Eigen::Index ck = static_cast<Eigen::Index>(config_.in_channels) * config_.kernel_width;
  LayoutBuilder layout;
  layout.add("ln.weight", config_.in_channels, config_.in_timepoints);
  layout.add("ln.bias", config_.in_channels, config_.in_timepoints);
  layout.add("conv.weight", config_.conv_filters, ck);
  layout.add("conv.bias", config_.conv_filters);
  head_ = DenseHead(config_.conv_filters, config_.hidden_units, config_.n_outputs);
  head_.add_to(layout);
  slices_ = layout.slices();
  size_ = layout.size();
  ln_w_ = slices_[0];
  ln_b_ = slices_[1];
  conv_w_ = slices_[2];
  conv_b_ = slices_[3];
}

Eigen::Index SimpleCnn::input_size() const {
  return static_cast<Eigen::Index>(config_.in_channels) * config_.in_timepoints;
}

ModelParams SimpleCnn::init_params(std::uint64_t seed) const {
  ModelParams p{Vector::Zero(size_), slices_};
  view(p.values, ln_w_).setOnes();
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(conv_w_.cols));
  for (const auto* s : {&conv_w_, &conv_b_}) {
    for (Eigen::Index i = 0; i < s->size(); ++i) p.values[s->offset + i] = bound * (2.0 * uniform_unit(rng) - 1.0);
  }
  head_.init(p.values, rng);
  return p;
}

Matrix SimpleCnn::pooled_features(const Vector& values, const RowMatrix& batch, Cache* cache) const {
  const Eigen::Index n = batch.rows();
  const int C = config_.in_channels;
  const Eigen::Index T = config_.in_timepoints;
  const int K = config_.kernel_width;
  const Eigen::Index t_out = T - K + 1;
  if (batch.cols() != input_size()) {
    throw ParameterError("cnn: batch has " + std::to_string(batch.cols()) + " values per sample, expected " +
                         std::to_string(input_size()) + " (" + std::to_string(C) + " x " + std::to_string(T) + ")");
  }
  const auto gamma = view(values, ln_w_);
  const auto beta = view(values, ln_b_);

  Matrix s(n, static_cast<Eigen::Index>(C) * K);
  Vector mean(n), inv_std(n);
  std::vector<double> prefix(static_cast<std::size_t>(T) + 1);
  const double inv_tout = 1.0 / static_cast<double>(t_out);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = batch.row(i);
    const double mu = x.mean();
    const double var = (x.array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + config_.ln_eps);
    mean[i] = mu;
    inv_std[i] = is;
    for (int c = 0; c < C; ++c) {
      prefix[0] = 0.0;
      for (Eigen::Index t = 0; t < T; ++t) {
        const double xn = (x[c * T + t] - mu) * is;
        prefix[static_cast<std::size_t>(t) + 1] = prefix[static_cast<std::size_t>(t)] + gamma(c, t) * xn + beta(c, t);
      }
      for (int k = 0; k < K; ++k) {
        s(i, static_cast<Eigen::Index>(c) * K + k) =
            (prefix[static_cast<std::size_t>(k + t_out)] - prefix[static_cast<std::size_t>(k)]) * inv_tout;
      }
    }
  }
  Matrix pooled = s * view(values, conv_w_).transpose();
  pooled.rowwise() += view(values, conv_b_).col(0).transpose();
  if (cache) {
    cache->window_means = std::move(s);
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  return pooled;
}

SimpleCnn::Output SimpleCnn::forward_full(const ModelParams& params, const RowMatrix& batch) const {
  Output out;
  out.pooled = pooled_features(params.values, batch, nullptr);
  out.outputs = head_.forward(params.values, out.pooled, nullptr);
  return out;
}

Matrix SimpleCnn::forward(const ModelParams& params, const RowMatrix& batch) const {
  return forward_full(params, batch).outputs;
}

double SimpleCnn::loss_and_gradient(const ModelParams& params, const RowMatrix& batch, LossKind kind,
                                    const Targets& targets, Vector& grad, double loss_scale, double tau) const {
  const Vector& values = params.values;
  if (values.size() != size_) throw ParameterError("cnn: parameter vector size mismatch");
  Cache cache;
  const Matrix pooled = pooled_features(values, batch, &cache);
  const Matrix out = head_.forward(values, pooled, &cache.head);
  const LossResult r = evaluate_loss(kind, out, targets, tau);

  grad = Vector::Zero(size_);
  const Matrix dpooled = head_.backward(values, cache.head, r.grad * loss_scale, grad);
  view(grad, conv_w_) += dpooled.transpose() * cache.window_means;
  view(grad, conv_b_) += dpooled.colwise().sum().transpose();
  const Matrix ds = dpooled * view(values, conv_w_);

  const int C = config_.in_channels;
  const Eigen::Index T = config_.in_timepoints;
  const int K = config_.kernel_width;
  const Eigen::Index t_out = T - K + 1;
  const double inv_tout = 1.0 / static_cast<double>(t_out);
  auto dgamma = view(grad, ln_w_);
  auto dbeta = view(grad, ln_b_);
  std::vector<double> prefix(static_cast<std::size_t>(K) + 1);
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const auto x = batch.row(i);
    for (int c = 0; c < C; ++c) {
      prefix[0] = 0.0;
      for (int k = 0; k < K; ++k) {
        prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] + ds(i, static_cast<Eigen::Index>(c) * K + k);
      }
      // x~[c, t] feeds taps k with 0 <= t - k < t_out
      for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Index k_lo = std::max<Eigen::Index>(0, t - t_out + 1);
        const Eigen::Index k_hi = std::min<Eigen::Index>(K - 1, t);
        const double dxt = (prefix[static_cast<std::size_t>(k_hi) + 1] - prefix[static_cast<std::size_t>(k_lo)]) * inv_tout;
        const double xn = (x[c * T + t] - cache.mean[i]) * cache.inv_std[i];
        dgamma(c, t) += dxt * xn;
        dbeta(c, t) += dxt;
      }
    }
  }
  return r.loss * loss_scale;
}

} // namespace leakaudit::nn
