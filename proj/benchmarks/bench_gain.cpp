#include <sgain/gain.hpp>
#include <sgain/models.hpp>

#include <benchmark/benchmark.h>

namespace {

void BM_GainSweep(benchmark::State& state) {
  const auto model = sgain::builtin("goodwin");
  const double T = 30.0, dt = 1e-3;
  const auto grid = sgain::WienerGrid::sample(3, -T, 0.0, dt, 42);
  const auto u = sgain::InputFunction::constant(T, dt, model.feedback.gamma() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(sgain::gain_apply(model, grid, u));
  state.SetItemsProcessed(state.iterations() * u.nodes());
}

void BM_GainFixedPoint(benchmark::State& state) {
  const auto model = sgain::builtin("goodwin");
  const double T = 30.0, dt = 1e-3;
  const auto grid = sgain::WienerGrid::sample(3, -T, 0.0, dt, 42);
  for (auto _ : state) benchmark::DoNotOptimize(sgain::gain_fixed_point(model, grid, T, 1e-12));
}

void BM_SublinearityCheck(benchmark::State& state) {
  const auto model = sgain::builtin("example45");
  for (auto _ : state) benchmark::DoNotOptimize(sgain::sublinearity_check(model.feedback));
}

}  // namespace

BENCHMARK(BM_GainSweep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GainFixedPoint)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SublinearityCheck)->Unit(benchmark::kMillisecond);
