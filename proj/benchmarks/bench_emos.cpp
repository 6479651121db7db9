#include <benchmark/benchmark.h>

#include "emos_sim.hpp"
#include "s2sflow/emos.hpp"

using namespace s2sflow;

static void BM_ZagaLoglikAndGradient(benchmark::State& state) {
  const auto cases = testing::simulate_cases(testing::reference_coefficients(), static_cast<std::size_t>(state.range(0)), 3);
  const SeasonalSplineBasis basis(6);
  const auto theta = testing::reference_coefficients().flatten();
  for (auto _ : state) benchmark::DoNotOptimize(zaga_loglik_and_gradient(theta, cases, basis));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ZagaLoglikAndGradient)->Arg(1000)->Arg(10000);

static void BM_FitEmos(benchmark::State& state) {
  const auto cases = testing::simulate_cases(testing::reference_coefficients(), 3000, 4);
  EmosFitOptions options;
  options.standard_errors = false;
  for (auto _ : state) benchmark::DoNotOptimize(fit_emos(cases, canonical_horizons()[0], 2015, options));
}
BENCHMARK(BM_FitEmos)->Unit(benchmark::kMillisecond);
