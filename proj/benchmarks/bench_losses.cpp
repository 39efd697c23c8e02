#include <benchmark/benchmark.h>

#include "oocforge/rng.hpp"
#include "oocforge/trainer.hpp"

using namespace oocforge;
using namespace oocforge::train;

namespace {

struct Fixture {
  LinearModel model;
  Dataset data;
  IndexList idx;
  std::vector<double> weights;
  std::array<std::size_t, 4> group_sizes{};
};

Fixture make_fixture(std::size_t n, std::size_t dim) {
  Rng rng(17);
  Fixture f;
  f.model.weights.resize(dim);
  for (double& w : f.model.weights) w = rng.normal(0.0, 0.5);
  f.model.bias = 0.1;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.features.resize(dim);
    for (double& x : ex.features) x = rng.normal();
    ex.y = rng.uniform() < 0.5 ? 1 : 0;
    ex.env = static_cast<int>(rng.below(4));
    f.data.push_back(std::move(ex));
    f.idx.push_back(i);
    f.group_sizes[f.data.back().env] += 1;
  }
  f.weights.assign(n, 0.5);
  return f;
}

}  // namespace

static void BM_LossErm(benchmark::State& state) {
  const auto f = make_fixture(state.range(0), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_erm(f.model, f.data, f.idx, 1e-4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossErm)->Arg(256)->Arg(4096);

static void BM_LossGdro(benchmark::State& state) {
  const auto f = make_fixture(state.range(0), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_gdro(f.model, f.data, f.idx, 30.0, f.group_sizes, 1e-4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossGdro)->Arg(256)->Arg(4096);

static void BM_LossIrm(benchmark::State& state) {
  const auto f = make_fixture(state.range(0), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_irm(f.model, f.data, f.idx, 1.0, 1e-4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossIrm)->Arg(256)->Arg(4096);

static void BM_LossCvar(benchmark::State& state) {
  const auto f = make_fixture(state.range(0), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_cvar(f.model, f.data, f.idx, 0.1, 1e-4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossCvar)->Arg(256)->Arg(4096);

static void BM_LossFocal(benchmark::State& state) {
  const auto f = make_fixture(state.range(0), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_focal(f.model, f.data, f.idx, 0.7, 1e-4));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossFocal)->Arg(256)->Arg(4096);

static void BM_TrainEpochs(benchmark::State& state) {
  const auto data = synth_spurious_dataset(3, 2000, 1.0, 2.0, 0.1);
  const auto valid = synth_spurious_dataset(4, 500, 1.0, 2.0, 0.1);
  TrainConfig config;
  config.lr = 0.05;
  config.batch_size = 64;
  config.max_epochs = static_cast<int>(state.range(0));
  config.patience = config.max_epochs;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oocforge::train::train(config, data, valid));
  }
}
BENCHMARK(BM_TrainEpochs)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
