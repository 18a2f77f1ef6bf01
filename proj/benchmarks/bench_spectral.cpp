#include "memcost/cost_engine.hpp"
#include "memcost/spectra.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_MPIntegrateResolvent(benchmark::State& state) {
  const memcost::MPLaw law(2.0);
  const double s2 = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::mp_integrate(law, [s2](double s) { return 1.0 / (s + s2); }));
  }
}
BENCHMARK(BM_MPIntegrateResolvent)->Arg(10)->Arg(1000);

void BM_SolveRho(benchmark::State& state) {
  const memcost::NoiseLevel noise(0.1);
  const double eps2 = 2.0 * memcost::memorization_threshold(2.0, noise);
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::solve_rho(2.0, noise, eps2).rho);
  }
}
BENCHMARK(BM_SolveRho)->Unit(benchmark::kMillisecond);

void BM_SolveRhoOls(benchmark::State& state) {
  const memcost::NoiseLevel noise(0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::solve_rho_ols(2.0, noise).rho);
  }
}
BENCHMARK(BM_SolveRhoOls)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
