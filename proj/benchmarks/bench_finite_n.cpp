#include "memcost/finite_n_lab.hpp"
#include "memcost/spectra.hpp"

#include <benchmark/benchmark.h>

namespace {

memcost::ExperimentConfig config(int n) {
  memcost::ExperimentConfig c;
  c.n = n;
  c.d = 2 * n;
  c.sigma2 = 0.1;
  c.seed = 11;
  c.trials = 1 << 30;
  return c;
}

void BM_SampleDesign(benchmark::State& state) {
  const auto c = config(static_cast<int>(state.range(0)));
  int trial = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::sample_design(c, trial++).X.data());
  }
}
BENCHMARK(BM_SampleDesign)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_BuildEstimator(benchmark::State& state) {
  const auto c = config(static_cast<int>(state.range(0)));
  const auto s = memcost::sample_design(c, 0);
  const double rho = 0.5 / memcost::esd_from_design(s.Z).values(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::build_estimator(s.X, s.sigma_sqrt, c.sigma2, rho).A.data());
  }
}
BENCHMARK(BM_BuildEstimator)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SpectralTrial(benchmark::State& state) {
  auto c = config(static_cast<int>(state.range(0)));
  c.target = memcost::RhoOrEps::rho(0.0);
  int trial = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcost::run_trial(c, trial++, memcost::TrialMode::spectral).train0);
  }
}
BENCHMARK(BM_SpectralTrial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

}  // namespace
