#include <benchmark/benchmark.h>

#include "swarmcap/data.hpp"
#include "swarmcap/model.hpp"
#include "swarmcap/rng.hpp"
#include "swarmcap/swarm.hpp"

namespace {

using namespace swarmcap;

SampleSet synthetic(std::size_t n) {
  SplitMix64 rng(1);
  SampleSet s;
  s.width = 3;
  for (std::size_t i = 0; i < n; ++i) {
    const double x[] = {rng.uniform(), rng.uniform(), rng.uniform()};
    s.push_back(x, rng.uniform());
  }
  return s;
}

void BM_Gradient(benchmark::State& state) {
  const auto params = init_params(Architecture::default_regressor(), 1);
  const auto batch = synthetic(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gradient(params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gradient)->Arg(32)->Arg(1024);

void BM_TrainEpoch(benchmark::State& state) {
  const auto params = init_params(Architecture::default_regressor(), 1);
  const auto data = synthetic(static_cast<std::size_t>(state.range(0)));
  const TrainHyper hyper;
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(params, data, hyper, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(2000)->Arg(8000);

void BM_Merge(benchmark::State& state) {
  const auto arch = Architecture::default_regressor();
  std::vector<ParamVector> list;
  std::vector<double> weights;
  for (int i = 0; i < state.range(0); ++i) {
    list.push_back(init_params(arch, static_cast<std::uint64_t>(i)));
    weights.push_back(1.0 + i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(merge(list, weights));
}
BENCHMARK(BM_Merge)->Arg(3)->Arg(8);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto curve = relaxation_curve(conditions::cy45_05(), 0.9, GeneratorParams{}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(curve));
}
BENCHMARK(BM_ExtractFeatures);

void BM_GenerateDataset(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(0));
}
BENCHMARK(BM_GenerateDataset)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
