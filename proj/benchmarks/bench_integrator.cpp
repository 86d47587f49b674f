#include <sgain/models.hpp>
#include <sgain/sde.hpp>

#include <benchmark/benchmark.h>

#include <string>

namespace {

const char* const kModels[] = {"goodwin", "example45"};

void BM_EulerMaruyamaSteps(benchmark::State& state) {
  const auto model = sgain::builtin(kModels[state.range(0)]);
  const auto grid = sgain::WienerGrid::sample(model.noise_dims(), 0.0, 10.0, 1e-3, 42);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(model.dim());
  for (auto _ : state) {
    auto traj = sgain::integrate_forward(model, grid, x0, 0.0, 10.0, {}, 10000);
    benchmark::DoNotOptimize(traj.states.back());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
  state.SetLabel(kModels[state.range(0)]);
}

void BM_Pullback(benchmark::State& state) {
  const auto model = sgain::builtin("goodwin");
  const auto grid = sgain::WienerGrid::sample(3, -30.0, 0.0, 1e-3, 42);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  for (auto _ : state) benchmark::DoNotOptimize(sgain::pullback(model, grid, x0, 30.0));
  state.SetItemsProcessed(state.iterations() * 30000);
}

}  // namespace

BENCHMARK(BM_EulerMaruyamaSteps)->Arg(0)->Arg(1);
BENCHMARK(BM_Pullback);
