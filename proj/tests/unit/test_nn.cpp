#include "leakaudit/errors.hpp"
#include "leakaudit/nn/adamw.hpp"
#include "leakaudit/nn/losses.hpp"
#include "leakaudit/nn/mlp.hpp"
#include "leakaudit/nn/simple_cnn.hpp"
#include "leakaudit/nn/trainer.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace leakaudit;
using namespace leakaudit::nn;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("leakaudit_nn_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

// Two Gaussian blobs in 4 dimensions.
struct Blobs {
  RowMatrix x;
  std::vector<int> y;
};

Blobs blobs(int n, double separation, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Blobs b;
  b.x.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    b.y.push_back(cls);
    for (int c = 0; c < 4; ++c) b.x(i, c) = g(rng) + (cls ? separation : -separation) * (c == 0);
  }
  return b;
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> r(hi - lo);
  std::iota(r.begin(), r.end(), lo);
  return r;
}

} // namespace

TEST(SimpleCnn, ConfigForInput) {
  const auto c = SimpleCnnConfig::for_input(8, 128, 128.0, 4);
  EXPECT_EQ(c.kernel_width, 13);
  EXPECT_EQ(c.conv_filters, 100);
  EXPECT_EQ(c.hidden_units, 64);
  EXPECT_EQ(c.n_outputs, 4);
  EXPECT_EQ(SimpleCnnConfig::for_input(1, 1000, 1000.0, 2).kernel_width, 100);
  auto bad = c;
  bad.kernel_width = 129;
  EXPECT_THROW(validate(bad), ParameterError);
  bad = c;
  bad.ln_eps = 0;
  EXPECT_THROW(validate(bad), ParameterError);
}

TEST(SimpleCnn, ParameterLayout) {
  SimpleCnnConfig c{2, 10, 3, 4, 5, 6};
  const SimpleCnn model(c);
  const auto p = model.init_params(1);
  const std::vector<std::pair<std::string, Eigen::Index>> expected{
      {"ln.weight", 20}, {"ln.bias", 20}, {"conv.weight", 24}, {"conv.bias", 3},
      {"fc1.weight", 15}, {"fc1.bias", 5}, {"fc2.weight", 30}, {"fc2.bias", 6}};
  ASSERT_EQ(p.slices.size(), expected.size());
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(p.slices[i].name, expected[i].first);
    EXPECT_EQ(p.slices[i].size(), expected[i].second);
    EXPECT_EQ(p.slices[i].offset, offset);
    offset += expected[i].second;
  }
  EXPECT_EQ(p.values.size(), offset);
  EXPECT_TRUE((p.matrix("ln.weight").array() == 1.0).all());
  EXPECT_TRUE((p.matrix("ln.bias").array() == 0.0).all());
  EXPECT_LE(p.matrix("conv.weight").cwiseAbs().maxCoeff(), 1.0 / std::sqrt(8.0));
  EXPECT_LE(p.matrix("fc2.weight").cwiseAbs().maxCoeff(), 1.0 / std::sqrt(5.0));
  EXPECT_TRUE(model.init_params(1).values == p.values);
  EXPECT_FALSE(model.init_params(2).values == p.values);
  EXPECT_THROW(p.slice("nope"), ParameterError);
}

TEST(SimpleCnn, ForwardMatchesLoopReference) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto in = gradcheck::random_instance(seed, LossKind::cross_entropy);
    const SimpleCnn model(in.config);
    const Matrix out = model.forward(in.params, in.batch);
    const std::vector<double> p(in.params.values.data(), in.params.values.data() + in.params.values.size());
    const auto ref = oracle::cnn_forward(gradcheck::shape_of(in.config), p, in.batch_rows, in.config.ln_eps);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < out.cols(); ++c) EXPECT_NEAR(out(r, c), ref[r][c], 1e-10);
    }
  }
}

TEST(SimpleCnn, RejectsWrongInputWidth) {
  const SimpleCnn model(SimpleCnnConfig{1, 10, 2, 2, 2, 2});
  RowMatrix batch = RowMatrix::Zero(2, 9);
  EXPECT_THROW(model.forward(model.init_params(0), batch), ParameterError);
}

class GradientCheck : public ::testing::TestWithParam<LossKind> {};

TEST_P(GradientCheck, AnalyticMatchesFiniteDifferences) {
  for (std::uint64_t seed = 100; seed < 115; ++seed) {
    const auto in = gradcheck::random_instance(seed, GetParam());
    const auto r = gradcheck::check(in, GetParam());
    EXPECT_LT(r.loss_gap, 1e-10) << "seed " << seed;
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Losses, GradientCheck,
                         ::testing::Values(LossKind::cross_entropy, LossKind::cosine, LossKind::infonce),
                         [](const auto& info) { return to_string(info.param); });

TEST(SimpleCnn, LossScaleScalesGradient) {
  const auto in = gradcheck::random_instance(7, LossKind::cross_entropy);
  const SimpleCnn model(in.config);
  Vector g1 = Vector::Zero(in.params.values.size()), g2 = g1;
  const double l1 = model.loss_and_gradient(in.params, in.batch, LossKind::cross_entropy, in.targets, g1);
  const double l2 = model.loss_and_gradient(in.params, in.batch, LossKind::cross_entropy, in.targets, g2, 100.0);
  EXPECT_NEAR(l2, 100.0 * l1, 1e-10);
  EXPECT_LE((g2 - 100.0 * g1).norm(), 1e-10 * g2.norm());
}

TEST(Mlp2, GradientMatchesFiniteDifferences) {
  const Mlp2 model(3, 4, 2);
  auto params = model.init_params(5);
  RowMatrix batch(3, 3);
  batch << 0.1, -0.4, 1.2, 0.7, 0.2, -0.9, -1.1, 0.5, 0.3;
  Targets t;
  t.classes = {0, 1, 1};
  Vector grad = Vector::Zero(params.values.size());
  model.loss_and_gradient(params, batch, LossKind::cross_entropy, t, grad);
  std::vector<double> x(params.values.data(), params.values.data() + params.values.size());
  const auto numeric = oracle::central_differences(
      [&](std::span<const double> p) {
        ModelParams q = params;
        q.values = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
        const Matrix out = model.forward(q, batch);
        std::vector<std::vector<double>> rows;
        for (Eigen::Index r = 0; r < out.rows(); ++r) rows.push_back({out(r, 0), out(r, 1)});
        return oracle::loss_value(oracle::Loss::cross_entropy, rows, t.classes, {}, kDefaultTemperature);
      },
      x, 1e-5);
  EXPECT_LT(gradcheck::max_relative_error(grad, numeric), 1e-4);
}

TEST(Losses, SoftmaxAndCrossEntropy) {
  const std::vector<double> z{1.0, 2.0, 3.0};
  const auto p = softmax(z);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  EXPECT_NEAR(cross_entropy(z, 2), lse - 3.0, 1e-14);
  const std::vector<double> big{1000.0, 0.0};
  EXPECT_NEAR(cross_entropy(big, 1), 1000.0, 1e-9);
  EXPECT_THROW(cross_entropy(z, 3), ParameterError);
}

TEST(Losses, CosineOfAlignedRowsIsZero) {
  Matrix a(2, 3);
  a << 1, 2, 3, -1, 0, 2;
  EXPECT_NEAR(cosine_loss(a, 3.0 * a).loss, 0.0, 1e-15);
  EXPECT_NEAR(cosine_loss(a, -a).loss, 2.0, 1e-15);
  Matrix zero = Matrix::Zero(2, 3);
  EXPECT_THROW(cosine_loss(zero, a), NumericalError);
  EXPECT_THROW(cosine_loss(a, Matrix::Ones(3, 3)), ParameterError);
}

TEST(Losses, InfoNceOnOrthonormalTargets) {
  const Matrix eye = Matrix::Identity(4, 4);
  const double tau = 0.07;
  const double expected = -std::log(std::exp(1 / tau) / (std::exp(1 / tau) + 3.0));
  EXPECT_NEAR(infonce_loss(eye, eye, tau).loss, expected, 1e-12);
  EXPECT_THROW(infonce_loss(eye, eye, 0.0), ParameterError);
}

TEST(Losses, NameRoundTrip) {
  for (auto k : {LossKind::cross_entropy, LossKind::cosine, LossKind::infonce}) EXPECT_EQ(loss_kind_from_string(to_string(k)), k);
  EXPECT_THROW(loss_kind_from_string("hinge"), ParameterError);
}

TEST(AdamW, FirstStepFromZeroState) {
  Vector p(3);
  p << 1.0, -2.0, 0.5;
  Vector g(3);
  g << 0.1, -0.3, 0.0;
  auto state = AdamWState::zeros(3);
  AdamWConfig c;
  c.lr = 0.01;
  c.weight_decay = 0.1;
  const Vector before = p;
  adamw_step(p, g, state, c);
  EXPECT_EQ(state.t, 1);
  for (int i = 0; i < 3; ++i) {
    const double step = g[i] / (std::abs(g[i]) + c.eps);
    EXPECT_NEAR(p[i], before[i] - c.lr * (step + c.weight_decay * before[i]), 1e-12);
  }
}

TEST(AdamW, SecondStepBiasCorrection) {
  Vector p = Vector::Zero(1);
  Vector g1 = Vector::Constant(1, 2.0), g2 = Vector::Constant(1, -1.0);
  auto state = AdamWState::zeros(1);
  AdamWConfig c;
  c.weight_decay = 0.0;
  adamw_step(p, g1, state, c);
  const double after1 = p[0];
  adamw_step(p, g2, state, c);
  const double m = (0.9 * 0.1 * 2.0 + 0.1 * -1.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 4.0 + 0.001 * 1.0) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], after1 - c.lr * m / (std::sqrt(v) + c.eps), 1e-12);
}

TEST(Params, SaveLoadRoundTrip) {
  const SimpleCnn model(SimpleCnnConfig{2, 8, 3, 2, 4, 2});
  const auto p = model.init_params(3);
  const auto dir = scratch("roundtrip");
  save_params(p, dir);
  const auto q = load_params(dir);
  EXPECT_TRUE(q.values == p.values);
  EXPECT_EQ(q.slices, p.slices);
  EXPECT_EQ(std::filesystem::file_size(dir / "params.bin"), static_cast<std::uintmax_t>(p.values.size()) * 8);
}

TEST(Params, LoadErrors) {
  EXPECT_THROW(load_params(scratch("missing")), IoError);
  const SimpleCnn model(SimpleCnnConfig{1, 4, 2, 2, 2, 2});
  const auto dir = scratch("truncated");
  save_params(model.init_params(0), dir);
  std::filesystem::resize_file(dir / "params.bin", 16);
  try {
    load_params(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::length_mismatch);
  }
  std::ofstream(dir / "params.json") << "{not json";
  EXPECT_THROW(load_params(dir), FormatError);
}

TEST(Trainer, LearnsSeparableBlobs) {
  const auto b = blobs(200, 3.0, 1);
  Targets t;
  t.classes = b.y;
  const auto data = matrix_data(b.x, t);
  const Mlp2 model(4, 8, 2);
  TrainConfig c;
  c.lr = 1e-2;
  c.max_epochs = 40;
  c.seed = 4;
  const auto tr = range(0, 160), va = range(160, 200);
  const auto r = train(model, c, data, tr, va, LossKind::cross_entropy);
  EXPECT_GE(r.history.best_metric, 0.95);
  const Matrix out = predict(model, r.params, data, va);
  EXPECT_NEAR(validation_metric(LossKind::cross_entropy, out, t.subset(va)), r.history.best_metric, 1e-12);
}

TEST(Trainer, DeterministicForSeed) {
  const auto b = blobs(100, 1.0, 2);
  Targets t;
  t.classes = b.y;
  const auto data = matrix_data(b.x, t);
  const Mlp2 model(4, 6, 2);
  TrainConfig c;
  c.max_epochs = 8;
  c.batch_size = 16;
  c.seed = 9;
  const auto tr = range(0, 80), va = range(80, 100);
  const auto r1 = train(model, c, data, tr, va, LossKind::cross_entropy);
  const auto r2 = train(model, c, data, tr, va, LossKind::cross_entropy);
  EXPECT_TRUE(r1.params.values == r2.params.values);
  EXPECT_EQ(r1.history, r2.history);
  c.seed = 10;
  EXPECT_FALSE(train(model, c, data, tr, va, LossKind::cross_entropy).params.values == r1.params.values);
}

TEST(Trainer, EarlyStoppingKeepsBestEpoch) {
  auto b = blobs(120, 0.0, 3);
  Targets t;
  t.classes = b.y;
  const auto data = matrix_data(b.x, t);
  const Mlp2 model(4, 16, 2);
  TrainConfig c;
  c.lr = 5e-2;
  c.max_epochs = 200;
  c.early_stop_patience = 3;
  c.seed = 1;
  const auto tr = range(0, 100), va = range(100, 120);
  const auto r = train(model, c, data, tr, va, LossKind::cross_entropy);
  EXPECT_TRUE(r.history.stopped_early);
  ASSERT_LT(r.history.epochs.size(), 200u);
  double best = -1;
  int best_epoch = 0;
  for (const auto& e : r.history.epochs) {
    if (e.val_metric > best) {
      best = e.val_metric;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.history.best_metric, best);
  EXPECT_EQ(r.history.best_epoch, best_epoch);
  EXPECT_EQ(r.history.epochs.back().epoch - best_epoch, c.early_stop_patience);
  const Matrix out = predict(model, r.params, data, va);
  EXPECT_EQ(validation_metric(LossKind::cross_entropy, out, t.subset(va)), best);
}

TEST(Trainer, RejectsBadConfig) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(validate(c), ParameterError);
  c = {};
  c.lr = -1;
  EXPECT_THROW(validate(c), ParameterError);
  const auto b = blobs(10, 1.0, 1);
  Targets t;
  t.classes = b.y;
  const Mlp2 model(4, 2, 2);
  const std::vector<std::size_t> none, bad{42};
  EXPECT_THROW(train(model, {}, matrix_data(b.x, t), none, none, LossKind::cross_entropy), ParameterError);
  EXPECT_THROW(train(model, {}, matrix_data(b.x, t), bad, none, LossKind::cross_entropy), ParameterError);
}

TEST(Mlp2Classifier, ZScoresOnTrainingRows) {
  auto b = blobs(200, 2.0, 5);
  b.x.col(1).array() = b.x.col(1).array() * 1000.0 + 5000.0;
  Mlp2Config c;
  c.hidden_units = 8;
  c.train.lr = 1e-2;
  c.train.max_epochs = 30;
  const auto tr = range(0, 150), va = range(150, 200);
  const auto clf = mlp2_train(b.x, b.y, tr, va, c);
  EXPECT_NEAR(clf.mean[1], b.x.col(1).head(150).mean(), 1e-6);
  const auto pred = clf.predict(b.x);
  int correct = 0;
  for (std::size_t i = 150; i < 200; ++i) correct += pred[i] == b.y[i];
  EXPECT_GE(correct, 40);
}
