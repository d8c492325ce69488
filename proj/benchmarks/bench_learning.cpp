#include <benchmark/benchmark.h>

#include "lsmrn/lsmrn.hpp"

using namespace lsmrn;

namespace {

SyntheticInstance road_stream(int n) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.T = 10;
  cfg.edge_density = 5.0;
  cfg.drift = 0.05;
  cfg.noise_sd = 1.0;
  cfg.seed = 3;
  return generate_synthetic(cfg);
}

void BM_GlobalLearn(benchmark::State& state) {
  const auto inst = road_stream(static_cast<int>(state.range(0)));
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  h.k = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(global_learn(inst.series, lap, h));
  state.counters["edges"] = static_cast<double>(inst.network.num_edges());
}
BENCHMARK(BM_GlobalLearn)->Args({200, 20})->Args({1000, 3})->Args({1000, 20})->Unit(benchmark::kMillisecond);

void BM_IncrementalUpdate(benchmark::State& state) {
  const auto inst = road_stream(static_cast<int>(state.range(0)));
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  h.k = static_cast<int>(state.range(1));
  const auto fit = global_learn(inst.series.slice(0, 9), lap, h);
  const auto ordering = update_ordering(inst.network, h.seed);
  for (auto _ : state)
    benchmark::DoNotOptimize(incremental_update(fit.state.U.back(), fit.state.B, inst.series.snapshot(9), ordering, h));
  state.counters["edges"] = static_cast<double>(inst.network.num_edges());
}
BENCHMARK(BM_IncrementalUpdate)->Args({200, 20})->Args({1000, 3})->Args({1000, 20})->Unit(benchmark::kMillisecond);

void BM_UpdateOrdering(benchmark::State& state) {
  const auto inst = road_stream(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(update_ordering(inst.network));
}
BENCHMARK(BM_UpdateOrdering)->Arg(1000)->Arg(10000);

void BM_Objective(benchmark::State& state) {
  const auto inst = road_stream(1000);
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  const auto s = initialize_state(inst.network.num_vertices(), h.k, inst.series.num_snapshots(), h.seed);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_objective(s, inst.series, lap, h));
}
BENCHMARK(BM_Objective)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
