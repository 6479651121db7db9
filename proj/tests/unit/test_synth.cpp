#include <doctest.h>

#include <cmath>
#include <limits>

#include "s2sflow/errors.hpp"
#include "s2sflow/synth.hpp"
#include "s2sflow/telemetry.hpp"

using namespace s2sflow;

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("scenario is a pure function of the config, independent of threads") {
  synth::ScenarioConfig cfg;
  cfg.years = 2;
  cfg.members = 4;
  const auto a = synth::generate_scenario(cfg);
  cfg.threads = 3;
  const auto b = synth::generate_scenario(cfg);
  CHECK(a.precipitation.values == b.precipitation.values);
  CHECK(a.inflow.values == b.inflow.values);
  REQUIRE(a.forecasts.size() == b.forecasts.size());
  for (std::size_t i = 0; i < a.forecasts.size(); ++i) CHECK(a.forecasts[i].members == b.forecasts[i].members);
  cfg.seed = 43;
  CHECK(synth::generate_scenario(cfg).precipitation.values != a.precipitation.values);
}

TEST_CASE("scenario layout and normalization") {
  synth::ScenarioConfig cfg;
  cfg.years = 3;
  cfg.members = 5;
  const auto sc = synth::generate_scenario(cfg);
  const auto record_days = static_cast<std::size_t>((make_date(2012, 1, 1) - make_date(2009, 1, 1)).count());
  double mean = 0.0;
  for (std::size_t t = 0; t < record_days; ++t) mean += sc.inflow.values[t];
  CHECK(mean / static_cast<double>(record_days) == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& f : sc.forecasts) {
    CHECK(f.member_count() == 5);
    CHECK(f.lead_days() == 46);
    CHECK(year_of(f.issue_date) < 2012);
    CHECK_NOTHROW(f.validate());
    // Every lead day of every forecast has a truth value.
    CHECK(f.issue_date + std::chrono::days{46} < sc.precipitation.end());
  }
  for (double p : sc.precipitation.values) CHECK(p >= 0.0);
  CHECK(sc.nao.get(2011, 12).has_value());
}

TEST_CASE("member latent correlation with the truth follows the half-life") {
  synth::ScenarioConfig cfg;
  cfg.years = 6;
  cfg.members = 6;
  const auto sc = synth::generate_scenario(cfg, true);
  for (const int d : {1, 5, 10, 20, 40}) {
    std::vector<double> m;
    std::vector<double> t;
    for (std::size_t i = 0; i < sc.forecasts.size(); ++i) {
      const auto base = static_cast<std::size_t>((sc.forecasts[i].issue_date - sc.precipitation.start).count());
      for (const auto& member : sc.member_latent[i]) {
        m.push_back(member[static_cast<std::size_t>(d - 1)]);
        t.push_back(sc.latent[base + static_cast<std::size_t>(d)]);
      }
    }
    CHECK(std::abs(pearson(m, t) - std::exp2(-d / 10.0)) < 0.08);
  }
}

TEST_CASE("weights") {
  synth::ScenarioConfig cfg;
  CHECK(cfg.weight(10) == doctest::Approx(0.5));
  cfg.half_life_days = std::numeric_limits<double>::infinity();
  CHECK(cfg.weight(40) == 1.0);
  cfg.fixed_weight = 0.0;
  CHECK(cfg.weight(1) == 0.0);
  cfg.fixed_weight = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  synth::ScenarioConfig bad;
  bad.members = 1;
  CHECK_THROWS_AS(synth::generate_scenario(bad), InputError);
  bad = {};
  bad.lead_days = 20;
  CHECK_THROWS_AS(synth::generate_scenario(bad), InputError);
}

TEST_CASE("hourly path preserves daily means") {
  const std::vector<double> daily = {5.0, 8.0, 2.0};
  const auto path = synth::hourly_from_daily(make_date(2011, 6, 1), daily);
  REQUIRE(path.inflow_m3s.size() == 72);
  for (std::size_t d = 0; d < 3; ++d) {
    double s = 0.0;
    for (std::size_t h = 0; h < 24; ++h) s += path.inflow_m3s[24 * d + h];
    CHECK(s / 24.0 == doctest::Approx(daily[d]).epsilon(1e-12));
  }
}

TEST_CASE("simulated telemetry stays within the plant envelope") {
  std::vector<double> daily(90);
  for (std::size_t i = 0; i < daily.size(); ++i) daily[i] = 10.0 + 6.0 * std::sin(0.2 * static_cast<double>(i));
  const Date start = make_date(2013, 1, 1);
  const auto path = synth::hourly_from_daily(start, daily);
  synth::TelemetrySimConfig cfg;
  cfg.curves = synth::default_plant_curves();
  cfg.compensation = synth::constant_compensation(start, start + std::chrono::days{100}, 0.3);
  const auto recs = synth::simulate_telemetry(path, cfg);
  REQUIRE(recs.size() == path.times.size());
  for (const auto& r : recs) {
    CHECK(cfg.curves.storage.contains_level(r.water_level_m));
    CHECK(r.power_w >= 0.0);
    CHECK(r.power_w <= 4e7);
  }
  CHECK_NOTHROW(cfg.curves.validate());
}
