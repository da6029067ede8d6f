#include <benchmark/benchmark.h>

#include "rel/conjugate.hpp"
#include "rel/curvature.hpp"
#include "rel/entropy.hpp"
#include "rel/flow.hpp"
#include "rel/manifold.hpp"

namespace {

rel::MetricState perturbed(int N) {
  const rel::TorusGrid grid = rel::TorusGrid::make(1.0, 1.0, N, N);
  return rel::make_geometry("sinxcosy:0.1", grid);
}

void BM_LaplaceBeltrami(benchmark::State& state) {
  const rel::MetricState g = perturbed(static_cast<int>(state.range(0)));
  const rel::ScalarField phi = g.torus().u;
  for (auto _ : state) benchmark::DoNotOptimize(rel::laplace_beltrami(g, phi));
  state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(BM_LaplaceBeltrami)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oN);

void BM_RicciStep(benchmark::State& state) {
  const rel::MetricState g = perturbed(static_cast<int>(state.range(0)));
  const double dt = 0.5 * rel::cfl_bound(g);
  for (auto _ : state) benchmark::DoNotOptimize(rel::ricci_step(g, dt));
}
BENCHMARK(BM_RicciStep)->RangeMultiplier(2)->Range(32, 256);

void BM_MuEstimate(benchmark::State& state) {
  const rel::MetricState g = perturbed(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rel::mu_estimate(g, 1.0));
}
BENCHMARK(BM_MuEstimate)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SolveConjugateHeat(benchmark::State& state) {
  const rel::FlowTrajectory traj = rel::evolve(perturbed(static_cast<int>(state.range(0))), 0.01, 1e-4, 0.1);
  const rel::ScalarField H1 = traj[0].constant_field(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rel::solve_conjugate_heat(traj, H1));
}
BENCHMARK(BM_SolveConjugateHeat)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
