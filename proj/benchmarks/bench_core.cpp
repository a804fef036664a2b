#include "leakaudit/dsp.hpp"
#include "leakaudit/nn/simple_cnn.hpp"
#include "leakaudit/random.hpp"
#include "leakaudit/surrogate.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace leakaudit;

namespace {

MultichannelSeries white(int channels, double duration_s, double fs) {
  SurrogateSpec spec;
  spec.channels = channels;
  spec.duration_s = duration_s;
  spec.fs = fs;
  spec.seed = 7;
  return synth(spec);
}

nn::RowMatrix random_batch(Eigen::Index rows, Eigen::Index cols) {
  Rng rng(3);
  std::normal_distribution<double> n;
  nn::RowMatrix b(rows, cols);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = n(rng);
  return b;
}

// Args: channels, timepoints at 128 Hz.
void BM_CnnForward(benchmark::State& state) {
  const auto c = static_cast<int>(state.range(0));
  const auto t = static_cast<int>(state.range(1));
  const nn::SimpleCnn model(nn::SimpleCnnConfig::for_input(c, t, 128.0, 40));
  const auto params = model.init_params(1);
  const auto batch = random_batch(64, model.input_size());
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(params, batch));
  state.SetItemsProcessed(state.iterations() * batch.rows());
}
BENCHMARK(BM_CnnForward)->Args({8, 128})->Args({32, 128})->Args({128, 500});

void BM_CnnBackward(benchmark::State& state) {
  const auto c = static_cast<int>(state.range(0));
  const auto t = static_cast<int>(state.range(1));
  const nn::SimpleCnn model(nn::SimpleCnnConfig::for_input(c, t, 128.0, 40));
  const auto params = model.init_params(1);
  const auto batch = random_batch(64, model.input_size());
  nn::Targets targets;
  for (int i = 0; i < 64; ++i) targets.classes.push_back(i % 40);
  nn::Vector grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        model.loss_and_gradient(params, batch, nn::LossKind::cross_entropy, targets, grad));
  }
  state.SetItemsProcessed(state.iterations() * batch.rows());
}
BENCHMARK(BM_CnnBackward)->Args({8, 128})->Args({32, 128})->Args({128, 500});

void BM_Bandpass(benchmark::State& state) {
  const auto series = white(static_cast<int>(state.range(0)), 60.0, 128.0);
  const Band alpha = canonical_band(BandName::alpha);
  for (auto _ : state) benchmark::DoNotOptimize(bandpass(series, alpha));
}
BENCHMARK(BM_Bandpass)->Arg(8)->Arg(32);

// Arg: duration in seconds at 200 Hz.
void BM_MorletEnvelope(benchmark::State& state) {
  const auto series = white(1, static_cast<double>(state.range(0)), 200.0);
  const std::span<const double> x(series.data.data(), static_cast<std::size_t>(series.timepoints()));
  for (auto _ : state) benchmark::DoNotOptimize(morlet_envelope(x, 200.0, 10.0, 7.0));
}
BENCHMARK(BM_MorletEnvelope)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AcfAtLags(benchmark::State& state) {
  const auto series = white(1, static_cast<double>(state.range(0)), 200.0);
  const std::span<const double> x(series.data.data(), static_cast<std::size_t>(series.timepoints()));
  const auto lags = lags_to_samples(logspace(0.5, 500.0, 200), 200.0);
  std::vector<std::size_t> usable;
  for (auto l : lags) {
    if (l < x.size()) usable.push_back(l);
  }
  for (auto _ : state) benchmark::DoNotOptimize(acf_at_lags(x, usable));
}
BENCHMARK(BM_AcfAtLags)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
