#include <benchmark/benchmark.h>

#include "s2sflow/cost_model.hpp"

using namespace s2sflow;

static void BM_OptimalAdjustment(benchmark::State& state) {
  const OperatingEnvelope env;
  const PriceConfig prices{50.0, 70.0};
  const ZagaDistribution d{1.0, 0.6, 0.05, 0.0};
  const auto forecast = EnergyForecast::from_zaga(d, env.clim_generation, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(optimal_adjustment(forecast, env, prices));
}
BENCHMARK(BM_OptimalAdjustment)->Arg(64)->Arg(256)->Arg(1024);
