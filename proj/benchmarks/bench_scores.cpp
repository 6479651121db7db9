#include <benchmark/benchmark.h>

#include <vector>

#include "s2sflow/random.hpp"
#include "s2sflow/verification.hpp"

using namespace s2sflow;

static void BM_FairCrpsEnsemble(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> members(static_cast<std::size_t>(state.range(0)));
  for (auto& m : members) m = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fair_crps_ensemble(members, 0.3));
}
BENCHMARK(BM_FairCrpsEnsemble)->Arg(11)->Arg(51)->Arg(1024);

static void BM_CrpsParametric(benchmark::State& state) {
  const ZagaDistribution d{1.5, 0.7, 0.1, 0.2};
  const int levels = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(crps_parametric(d, 1.1, levels));
}
BENCHMARK(BM_CrpsParametric)->Arg(256)->Arg(1024)->Arg(4096);
