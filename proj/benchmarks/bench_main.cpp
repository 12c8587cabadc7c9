#include <benchmark/benchmark.h>

#include <random>

#include "neuromap/mapper.hpp"
#include "neuromap/tiler.hpp"
#include "neuromap/xbar_sim.hpp"

using namespace neuromap;

namespace {

NetworkSpec small_mobile() {
  return {"bench", {32, 3},
          {LayerSpec::standard(3, 2, 1, 3, 16), LayerSpec::depthwise(3, 1, 1, 16),
           LayerSpec::pointwise(16, 32), LayerSpec::depthwise(3, 2, 1, 32),
           LayerSpec::pointwise(32, 64), LayerSpec::global_avg_pool(8, 64)}};
}

void BM_AxonCount(benchmark::State& state) {
  std::size_t sum = 0;
  for (auto _ : state) {
    for (std::size_t r = 1; r <= 16; ++r)
      for (std::size_t c = 1; c <= 16; ++c) sum += axon_count(3, 2, r, c);
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_AxonCount);

void BM_SelectTile(benchmark::State& state) {
  const auto net = infer_shapes(preset("table1-1024"));
  const CoreSpec core{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) {
    for (const auto& layer : net.layers) benchmark::DoNotOptimize(select_tile(layer, core));
  }
}
BENCHMARK(BM_SelectTile)->Arg(1024);

void BM_MapNetwork(benchmark::State& state) {
  const auto net = infer_shapes(small_mobile());
  const auto weights = random_weights(net, 1);
  for (auto _ : state) benchmark::DoNotOptimize(map_network(net, weights, {256, 256}));
}
BENCHMARK(BM_MapNetwork)->Unit(benchmark::kMillisecond);

void BM_RunMapped(benchmark::State& state) {
  const auto net = infer_shapes(small_mobile());
  const auto weights = random_weights(net, 1);
  const auto placement = map_network(net, weights, {256, 256});
  const auto x = random_input(net.input, 2);
  for (auto _ : state) benchmark::DoNotOptimize(run_mapped(placement, x));
}
BENCHMARK(BM_RunMapped)->Unit(benchmark::kMillisecond);

void BM_CoreMvm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto scheme = state.range(1) ? SynapseScheme::Split : SynapseScheme::Differential;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  WeightMatrix w(n, n);
  for (double& v : w.values) v = dist(rng);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  const CoreState core(w, std::vector<double>(n, 0.0), Activation::ReLU, scheme);
  for (auto _ : state) benchmark::DoNotOptimize(core_mvm(core, x));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_CoreMvm)->Args({256, 0})->Args({256, 1})->Args({1024, 0})->Args({1024, 1});

}  // namespace
BENCHMARK_MAIN();
