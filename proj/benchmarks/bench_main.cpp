#include <benchmark/benchmark.h>

#include <hypermass/brane_action.hpp>
#include <hypermass/conformal_yamabe.hpp>
#include <hypermass/deformation.hpp>
#include <hypermass/fd_oracle.hpp>
#include <hypermass/fields.hpp>
#include <hypermass/grid.hpp>
#include <hypermass/metric.hpp>
#include <hypermass/warped_geometry.hpp>

#include <vector>

using namespace hypermass;

namespace {

RadialMetricSpec trace_metric(double mu) {
  auto g = hyperbolic_metric(2, 4.0);
  g.alpha = make_constant_trace_alpha(mu, 2);
  return g;
}

void BM_ScalarExact(benchmark::State& state) {
  const auto spec = trace_metric(-2.0);
  const SpherePoint x{0.7, 1.3};
  for (auto _ : state) benchmark::DoNotOptimize(scalar_curvature_exact(spec, x, 6.0));
}
BENCHMARK(BM_ScalarExact);

void BM_ScalarOracle(benchmark::State& state) {
  const auto spec = trace_metric(-2.0);
  const SpherePoint x{0.7, 1.3};
  for (auto _ : state) benchmark::DoNotOptimize(warped_scalar_oracle(spec, x, 6.0, 4.0, 1e9));
}
BENCHMARK(BM_ScalarOracle);

void BM_CurvatureGrid(benchmark::State& state) {
  const auto spec = trace_metric(-2.0);
  const int k = static_cast<int>(state.range(0));
  const Grid grid = Grid::product(linspace(4.0, 40.0, k), k / 2, k / 2);
  for (auto _ : state) benchmark::DoNotOptimize(scalar_curvature_on_grid(spec, grid));
  state.SetItemsProcessed(state.iterations() * grid.size());
}
BENCHMARK(BM_CurvatureGrid)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BuildDeformation(benchmark::State& state) {
  const auto spec = trace_metric(-2.0 * static_cast<double>(state.range(0)) / 10.0);
  const Grid sphere = Grid::product(linspace(4.0, 8.0, 5), 6, 8);
  for (auto _ : state) benchmark::DoNotOptimize(build_deformation(spec, sphere));
}
BENCHMARK(BM_BuildDeformation)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_PrincipalEigenvalue(benchmark::State& state) {
  CuspModel m;
  m.n = 2;
  m.sides.assign(2, 1.0);
  const int k = static_cast<int>(state.range(0));
  const TorusGrid g(std::vector<int>(2, k), std::vector<double>(2, 1.0));
  const auto slice = cusp_slice(m, g, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(principal_eigenvalue(slice, StabilityForm::stationary));
}
BENCHMARK(BM_PrincipalEigenvalue)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_YamabeSolve(benchmark::State& state) {
  const int ns = static_cast<int>(state.range(0));
  const auto p = yamabe_problem(*conformal_bump_compact(3, 0.3), {1e-3, 5.0, ns, 0});
  for (auto _ : state) benchmark::DoNotOptimize(yamabe_solve(p));
}
BENCHMARK(BM_YamabeSolve)->Arg(201)->Arg(801)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
