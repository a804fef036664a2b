#pragma once

#include "leakaudit/nn/model.hpp"
#include "leakaudit/nn/trainer.hpp"
#include "leakaudit/random.hpp"

#include <cmath>
#include <memory>
#include <span>

namespace leakaudit::nn {

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Linear -> sigmoid -> linear. Slices are named <prefix>1.weight,
// <prefix>1.bias, <prefix>2.weight, <prefix>2.bias.
class DenseHead {
public:
  DenseHead() = default;
  DenseHead(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, std::string prefix = "fc");

  void add_to(LayoutBuilder& layout);
  // Uniform(+-1/sqrt(fan_in)) weights and biases.
  void init(Vector& values, Rng& rng) const;

  struct Cache {
    Matrix input;
    Matrix hidden;
  };
  Matrix forward(const Vector& values, const Matrix& x, Cache* cache) const;
  // Accumulates into grad and returns the gradient with respect to the input.
  Matrix backward(const Vector& values, const Cache& cache, const Matrix& dout, Vector& grad) const;

  Eigen::Index in() const noexcept { return in_; }
  Eigen::Index hidden() const noexcept { return hidden_; }
  Eigen::Index out() const noexcept { return out_; }

private:
  Eigen::Index in_ = 0, hidden_ = 0, out_ = 0;
  std::string prefix_;
  ParamSlice w1_, b1_, w2_, b2_;
};

class Mlp2 final : public Model {
public:
  Mlp2(Eigen::Index in, Eigen::Index hidden, Eigen::Index out);

  Eigen::Index input_size() const override { return head_.in(); }
  Eigen::Index output_size() const override { return head_.out(); }
  ModelParams init_params(std::uint64_t seed) const override;
  Matrix forward(const ModelParams& params, const RowMatrix& batch) const override;
  double loss_and_gradient(const ModelParams& params, const RowMatrix& batch, LossKind kind, const Targets& targets,
                           Vector& grad, double loss_scale = 1.0, double tau = kDefaultTemperature) const override;

private:
  DenseHead head_;
  std::vector<ParamSlice> slices_;
  Eigen::Index size_ = 0;
};

struct Mlp2Config {
  int hidden_units = 64;
  TrainConfig train;
};

// Two-layer classifier on fixed features with z-scoring fitted on the
// training rows.
struct Mlp2Classifier {
  Vector mean;
  Vector scale;
  std::shared_ptr<const Mlp2> model;
  ModelParams params;
  TrainHistory history;

  Matrix logits(const RowMatrix& features) const;
  std::vector<int> predict(const RowMatrix& features) const;
};

Mlp2Classifier mlp2_train(const RowMatrix& features, std::span<const int> labels, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> val_rows, const Mlp2Config& config);

} // namespace leakaudit::nn
