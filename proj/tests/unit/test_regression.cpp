#include <doctest.h>

#include <algorithm>

#include <Eigen/Dense>

#include "s2sflow/errors.hpp"
#include "s2sflow/random.hpp"
#include "s2sflow/regression.hpp"
#include "s2sflow/synth.hpp"

using namespace s2sflow;

TEST_CASE("fit_linear recovers an exact line and matches a QR solve on noisy data") {
  std::vector<TrainingPair> exact;
  for (int i = 0; i < 40; ++i) exact.push_back({make_date(2010, 1, 1), 0.5 * i, 0.3 * (0.5 * i) - 0.2});
  const auto m = fit_linear(exact, {});
  CHECK(m.slope == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(m.intercept == doctest::Approx(-0.2).epsilon(1e-12));

  Rng rng(4);
  std::vector<TrainingPair> noisy;
  Eigen::MatrixXd X(200, 2);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    const double p = 5.0 * rng.uniform();
    const double q = 0.2 * p + 0.4 + 0.1 * rng.normal();
    noisy.push_back({make_date(2010, 1, 1), p, q});
    X(i, 0) = 1.0;
    X(i, 1) = p;
    y(i) = q;
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  const auto fit = fit_linear(noisy, {2011, 2010});
  CHECK(fit.intercept == doctest::Approx(beta(0)).epsilon(1e-10));
  CHECK(fit.slope == doctest::Approx(beta(1)).epsilon(1e-10));
  CHECK(fit.excluded_years == std::vector<int>{2010, 2011});
  CHECK(fit.excludes(2011));
  CHECK_FALSE(fit.excludes(2012));
}

TEST_CASE("fit_linear input errors") {
  std::vector<TrainingPair> few(10, {make_date(2010, 1, 1), 1.0, 1.0});
  CHECK_THROWS_AS(fit_linear(few, {}), InputError);
  std::vector<TrainingPair> flat(50, {make_date(2010, 1, 1), 2.0, 1.0});
  CHECK_THROWS_AS(fit_linear(flat, {}), InputError);
}

TEST_CASE("benchmark generation applies the line and guards against leakage") {
  LinearInflowModel m;
  m.slope = 0.5;
  m.intercept = -1.0;
  m.excluded_years = {2012, 2013};
  EnsemblePrecipForecast f{make_date(2012, 5, 3), {std::vector<double>(42, 1.0), std::vector<double>(42, 4.0)}};
  const auto b = generate_benchmark(f, canonical_horizons()[2], m);
  REQUIRE(b.members.size() == 2);
  CHECK(b.members[0] == doctest::Approx(-0.5));
  CHECK(b.members[1] == doctest::Approx(1.0));
  f.issue_date = make_date(2014, 5, 1);
  CHECK_THROWS_AS(generate_benchmark(f, canonical_horizons()[0], m), InputError);
}

TEST_CASE("cross-validation excludes the forecast year and the next in every fold") {
  synth::ScenarioConfig cfg;
  cfg.years = 6;
  cfg.members = 5;
  const auto sc = synth::generate_scenario(cfg);
  const auto inflow = to_daily(sc.inflow);
  const auto folds = run_cross_validation(sc.forecasts, inflow, canonical_horizons());
  REQUIRE(folds.size() == 6);
  for (const auto& fold : folds) {
    CHECK(fold.model.excluded_years == excluded_years_for(fold.year));
    // Independent refit on the pairs that survive the exclusion.
    const auto pairs = build_week1_pairs(sc.forecasts, inflow, PairMode::MemberWise, fold.model.excluded_years);
    for (const auto& p : pairs) {
      CHECK(year_of(p.issue_date) != fold.year);
      CHECK(year_of(p.issue_date) != fold.year + 1);
    }
    const auto refit = fit_linear(pairs, {});
    CHECK(fold.model.slope == doctest::Approx(refit.slope).epsilon(1e-12));
    for (const auto& b : fold.forecasts) CHECK(year_of(b.issue_date) == fold.year);
    // The synthetic inflow responds positively to precipitation.
    CHECK(fold.model.slope > 0.0);
  }
  CvOptions strict;
  strict.min_years = 7;
  CHECK_THROWS_AS(run_cross_validation(sc.forecasts, inflow, {}, strict), InputError);
}

TEST_CASE("ensemble-mean pairing yields one pair per issue") {
  synth::ScenarioConfig cfg;
  cfg.years = 3;
  cfg.members = 4;
  const auto sc = synth::generate_scenario(cfg);
  const auto inflow = to_daily(sc.inflow);
  const auto member = build_week1_pairs(sc.forecasts, inflow, PairMode::MemberWise, {});
  const auto mean = build_week1_pairs(sc.forecasts, inflow, PairMode::EnsembleMean, {});
  CHECK(member.size() == 4 * mean.size());
}
