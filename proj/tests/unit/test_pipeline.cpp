#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "s2sflow/pipeline.hpp"
#include "s2sflow/synth.hpp"

using namespace s2sflow;

namespace {

struct Fixture {
  synth::Scenario scenario;
  DailySeries inflow;
  pipeline::TrainedModels models;
  std::vector<pipeline::ForecastCase> cases;
  std::vector<pipeline::ScoredCase> scored;

  Fixture() {
    synth::ScenarioConfig cfg;
    cfg.years = 6;
    cfg.members = 6;
    scenario = synth::generate_scenario(cfg);
    inflow = to_daily(scenario.inflow);
    pipeline::TrainOptions opt;
    opt.horizons = {horizon_by_name("Week 1"), horizon_by_name("Week 5")};
    opt.emos.starts = 1;
    opt.emos.standard_errors = false;
    models = pipeline::train(scenario.forecasts, inflow, opt);
    cases = pipeline::apply(models, scenario.forecasts, &inflow);
    pipeline::ScoreOptions so;
    so.crps_levels = 256;
    scored = pipeline::score(cases, inflow, so);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("training produces one regression per year and one EMOS model per fold and horizon") {
  const auto& f = fixture();
  CHECK(f.models.fold_years == std::vector<int>{2009, 2010, 2011, 2012, 2013, 2014});
  CHECK(f.models.emos.size() == 12);
  for (int y : f.models.fold_years) {
    REQUIRE(f.models.regression_for(y) != nullptr);
    CHECK(f.models.regression_for(y)->excludes(y));
    CHECK(f.models.regression_for(y)->excludes(y + 1));
    for (const auto& h : f.models.horizons) {
      const auto* e = f.models.emos_for(y, h.name);
      REQUIRE(e != nullptr);
      CHECK(e->diagnostics.converged);
    }
  }
  CHECK(f.models.regression_for(2030) == nullptr);
}

TEST_CASE("every forecast is produced by its own fold") {
  const auto& f = fixture();
  CHECK(f.cases.size() == 2 * f.scenario.forecasts.size());
  for (const auto& c : f.cases) {
    CHECK(c.fold_year == year_of(c.issue_date));
    CHECK(c.benchmark.size() == 6);
    CHECK_NOTHROW(c.dist.validate());
  }
}

TEST_CASE("scores agree with direct evaluation and week 1 is skilful") {
  const auto& f = fixture();
  REQUIRE(!f.scored.empty());
  for (std::size_t i = 0; i < f.scored.size(); i += 97) {
    const auto& s = f.scored[i];
    CHECK(s.crps_benchmark == doctest::Approx(fair_crps_ensemble(s.forecast.benchmark, s.forecast.observed)));
    CHECK(s.crps_climatology == doctest::Approx(fair_crps_ensemble(s.climatology, s.forecast.observed)));
    CHECK(s.crps_emos == doctest::Approx(crps_parametric(s.forecast.dist, s.forecast.observed, 256)));
  }
  SkillOptions so;
  so.replicates = 200;
  const auto reports = pipeline::horizon_skill(f.scored, f.models.horizons, pipeline::ForecastSource::Emos, so);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].horizon == "Week 1");
  CHECK(reports[0].lower > 0.0);
  CHECK(reports[0].fcrpss > reports[1].fcrpss);
}

TEST_CASE("cost cases use the climatological median and the predictive median") {
  const auto& f = fixture();
  const OperatingEnvelope env;
  const auto cc = pipeline::cost_cases(f.scored, "Week 1", env, 64);
  REQUIRE(!cc.empty());
  const auto& first = *std::find_if(f.scored.begin(), f.scored.end(),
                                    [](const auto& s) { return s.forecast.horizon.name == "Week 1"; });
  auto clim = first.climatology;
  std::sort(clim.begin(), clim.end());
  const std::size_t n = clim.size();
  const double median = n % 2 == 1 ? clim[n / 2] : 0.5 * (clim[n / 2 - 1] + clim[n / 2]);
  CHECK(cc[0].clim_generation == doctest::Approx(median * 7.0));
  CHECK(cc[0].observed_energy == doctest::Approx(first.forecast.observed * 7.0));
  CHECK(cc[0].forecasts[1].energy[0] == doctest::Approx(first.forecast.dist.user_quantile(0.5) * 7.0));
  CHECK(cc[0].forecasts[2].energy.size() >= 64);
}
