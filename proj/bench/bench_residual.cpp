#include <benchmark/benchmark.h>

#include <cmath>

#include "ttriple/models.hpp"

namespace {

using namespace ttriple;

PhaseSection em_section(std::size_t n) {
  const Grid g{{n, n}, {-1.0, -1.0}, {2.0 / double(n - 1), 2.0 / double(n - 1)}};
  return sample_section(g, 2, [](const Vec& x) { return Vec{std::sin(x[1]) * x[0], std::cos(x[0]) * x[1]}; });
}

template <ResidualGrid (*Kernel)(const FieldModel&, const PhaseSection&, ResidualKind)>
void residual(benchmark::State& state) {
  const FieldModel fm = electromagnetic(Eigen::MatrixXd::Identity(2, 2));
  const PhaseSection s = em_section(std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(fm, s, ResidualKind::el).max);
  state.SetItemsProcessed(state.iterations() * std::int64_t(s.grid.nodes()));
}

}  // namespace

BENCHMARK(residual<pde_residual_serial>)->Name("em2_residual/serial")->Arg(33)->Arg(65)->Arg(129);
BENCHMARK(residual<pde_residual>)->Name("em2_residual/openmp")->Arg(33)->Arg(65)->Arg(129);

BENCHMARK_MAIN();
