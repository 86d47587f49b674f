#include <sgain/philox.hpp>
#include <sgain/wiener.hpp>

#include <benchmark/benchmark.h>

static void BM_KeyedNormal(benchmark::State& state) {
  std::int64_t slot = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sgain::keyed_normal({42, 0, 0, slot++}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KeyedNormal);

static void BM_SampleGrid(benchmark::State& state) {
  const auto nodes = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sgain::WienerGrid::sample(3, -nodes * 1e-3, 0.0, 1e-3, 42));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 3);
}
BENCHMARK(BM_SampleGrid)->Arg(1000)->Arg(30000);

static void BM_RefineBy4(benchmark::State& state) {
  const auto grid = sgain::WienerGrid::sample(3, -10.0, 0.0, 1e-2, 42);
  for (auto _ : state) benchmark::DoNotOptimize(grid.refine(4));
  state.SetItemsProcessed(state.iterations() * grid.node_count() * 3 * 4);
}
BENCHMARK(BM_RefineBy4);
