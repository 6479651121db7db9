#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s2sflow/errors.hpp"
#include "s2sflow/random.hpp"
#include "s2sflow/verification.hpp"

using namespace s2sflow;

namespace {

double brute_fair_crps(const std::vector<double>& x, double y) {
  const double k = static_cast<double>(x.size());
  double a = 0.0;
  double b = 0.0;
  for (double xi : x) {
    a += std::abs(xi - y);
    for (double xj : x) b += std::abs(xi - xj);
  }
  return a / k - b / (2.0 * k * (k - 1.0));
}

// Closed-form CRPS of a gamma(shape a, scale s) forecast.
double gamma_crps(double a, double s, double y) {
  const double z = y / s;
  const double beta_half = std::exp(std::lgamma(0.5) + std::lgamma(a) - std::lgamma(a + 0.5));
  return y * (2.0 * gamma_p(a, z) - 1.0) - a * s * (2.0 * gamma_p(a + 1.0, z) - 1.0) - s / beta_half;
}

SkillCase make_case(Date d, double f, double c) { return {d, canonical_horizons()[0], 0.0, f, c}; }

}  // namespace

TEST_SUITE("scores") {
  TEST_CASE("fair CRPS matches the double loop") {
    Rng rng(1);
    for (int rep = 0; rep < 500; ++rep) {
      std::vector<double> x(2 + rng.index(19));
      for (auto& v : x) v = rng.normal();
      const double y = rng.normal();
      CHECK(std::abs(fair_crps_ensemble(x, y) - brute_fair_crps(x, y)) <= 1e-12);
    }
    CHECK(fair_crps_ensemble(std::vector<double>{0.0, 2.0}, 1.0) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(fair_crps_ensemble(std::vector<double>{1.0}, 0.0), InputError);
  }

  TEST_CASE("parametric CRPS reduces to the exponential and gamma closed forms") {
    for (const double mu : {0.5, 1.0, 3.0}) {
      const ZagaDistribution exp_dist{mu, 1.0, 0.0, 0.0};
      CHECK(crps_parametric(exp_dist, 0.0) == doctest::Approx(mu / 2.0).epsilon(1e-3));
      for (const double y : {0.2, 1.0, 4.0}) {
        const double closed = y + 2.0 * mu * std::exp(-y / mu) - 1.5 * mu;
        CHECK(crps_parametric(exp_dist, y) == doctest::Approx(closed).epsilon(1e-3));
      }
    }
    for (const double sigma : {0.3, 0.7, 1.5}) {
      const ZagaDistribution d{1.4, sigma, 0.0, 0.0};
      for (const double y : {0.1, 1.0, 3.0}) {
        CHECK(crps_parametric(d, y) == doctest::Approx(gamma_crps(d.shape(), d.scale(), y)).epsilon(1e-3));
      }
    }
  }

  TEST_CASE("parametric CRPS handles the atom and the offset") {
    // A pure-atom limit: nu close to 1 behaves like a point forecast at -offset.
    const ZagaDistribution d{1.0, 0.5, 0.999999, 0.5};
    CHECK(crps_parametric(d, 1.0) == doctest::Approx(1.5).epsilon(1e-4));
    // Shifting forecast and observation together leaves the score unchanged.
    const ZagaDistribution a{1.2, 0.6, 0.3, 0.0};
    const ZagaDistribution b{1.2, 0.6, 0.3, 0.8};
    CHECK(crps_parametric(a, 0.9) == doctest::Approx(crps_parametric(b, 0.1)).epsilon(1e-12));
    // Observations below the support.
    CHECK(crps_parametric(b, -2.0) == doctest::Approx(crps_parametric(a, -1.2)).epsilon(1e-12));
  }

  TEST_CASE("parametric CRPS agrees with Monte Carlo") {
    const ZagaDistribution d{1.1, 0.8, 0.25, 0.2};
    Rng rng(3);
    const int n = 200000;
    std::vector<double> draws(n);
    for (auto& v : draws) v = d.sample_user(rng);
    // E|X - y| - 0.5 E|X - X'| with X' the independent second half.
    const double y = 0.7;
    double e1 = 0.0;
    double e2 = 0.0;
    for (int i = 0; i < n; ++i) e1 += std::abs(draws[static_cast<std::size_t>(i)] - y);
    for (int i = 0; i < n / 2; ++i) {
      e2 += std::abs(draws[static_cast<std::size_t>(i)] - draws[static_cast<std::size_t>(i + n / 2)]);
    }
    const double mc = e1 / n - 0.5 * e2 / (n / 2);
    CHECK(crps_parametric(d, y) == doctest::Approx(mc).epsilon(0.01));
  }

  TEST_CASE("fCRPSS and skill classes") {
    const std::vector<double> f(25, 0.5);
    const std::vector<double> c(25, 1.0);
    CHECK(fcrpss(f, c) == doctest::Approx(0.5));
    CHECK_THROWS_AS(fcrpss(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0)), InputError);
    CHECK_THROWS_AS(fcrpss(f, std::vector<double>(24, 1.0)), InputError);
    CHECK_THROWS_AS(fcrpss(f, std::vector<double>(25, 0.0)), NumericalError);
    CHECK(classify_skill(0.0) == SkillClass::None);
    CHECK(classify_skill(0.1) == SkillClass::Fair);
    CHECK(classify_skill(0.15) == SkillClass::Good);
    CHECK(classify_skill(0.30) == SkillClass::Good);
    CHECK(classify_skill(0.31) == SkillClass::VeryGood);
    CHECK(std::string(to_string(SkillClass::VeryGood)) == "very good");
  }
}

TEST_SUITE("calibration") {
  TEST_CASE("reliability diagram counts observations at or below the quantile") {
    const std::vector<double> levels = {0.25, 0.5, 0.75};
    std::vector<std::vector<double>> q;
    std::vector<double> obs;
    for (int i = 0; i < 100; ++i) {
      q.push_back({1.0, 2.0, 3.0});
      obs.push_back(static_cast<double>(i % 4));  // 0, 1, 2, 3
    }
    const auto r = reliability_diagram(q, obs, levels);
    CHECK(r.n == 100);
    CHECK(r.coverage[0] == doctest::Approx(0.5));
    CHECK(r.coverage[1] == doctest::Approx(0.75));
    CHECK(r.coverage[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS(reliability_diagram(std::span(q).first(10), std::span(obs).first(10), levels), InputError);
  }

  TEST_CASE("observations on the point mass count fractionally") {
    const std::vector<ZagaDistribution> fc(4, ZagaDistribution{1.0, 1.0, 0.4, 0.0});
    const std::vector<double> obs = {0.0, 0.0, 0.0, 5.0};
    const std::vector<double> levels = {0.1, 0.4, 0.9};
    const auto r = reliability_diagram(fc, obs, levels, 1);
    CHECK(r.coverage[0] == doctest::Approx(3.0 * 0.25 / 4.0));
    CHECK(r.coverage[1] == doctest::Approx(3.0 / 4.0));
    // 5 lies above the 0.9 quantile of this forecast (about 1.8).
    CHECK(r.coverage[2] == doctest::Approx(3.0 / 4.0));
  }

  TEST_CASE("coverage never decreases with the nominal level") {
    Rng rng(12);
    std::vector<double> levels;
    for (int i = 1; i < 50; ++i) levels.push_back(i / 50.0);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<ZagaDistribution> fc;
      std::vector<double> obs;
      for (int i = 0; i < 200; ++i) {
        fc.push_back({0.2 + 2.0 * rng.uniform(), 0.2 + rng.uniform(), 0.6 * rng.uniform(), 0.3 * rng.uniform()});
        // Observations from a different, deliberately miscalibrated law.
        obs.push_back(rng.uniform() < 0.3 ? -fc.back().offset : 3.0 * rng.uniform());
      }
      const auto r = reliability_diagram(fc, obs, levels);
      for (std::size_t j = 1; j < levels.size(); ++j) CHECK(r.coverage[j] >= r.coverage[j - 1]);
    }
  }

  TEST_CASE("calibrated ZAGA forecasts have uniform PIT and reliable coverage") {
    Rng rng(4);
    std::vector<ZagaDistribution> fc;
    std::vector<double> obs;
    std::vector<double> pit;
    for (int i = 0; i < 2000; ++i) {
      const ZagaDistribution d{0.5 + rng.uniform(), 0.3 + 0.7 * rng.uniform(), 0.3 * rng.uniform(), 0.1};
      fc.push_back(d);
      obs.push_back(d.sample_user(rng));
    }
    for (std::size_t i = 0; i < fc.size(); ++i) pit.push_back(pit_value(fc[i], obs[i], rng));
    CHECK(ks_uniform_test(pit).p_value > 0.01);
    const std::vector<double> levels = {0.05, 0.1, 0.3, 0.5, 0.7, 0.9};
    const auto r = reliability_diagram(fc, obs, levels);
    for (std::size_t j = 0; j < levels.size(); ++j) {
      const auto [lo, hi] = binomial_band(r.n, levels[j], 0.999);
      CHECK(r.coverage[j] >= lo);
      CHECK(r.coverage[j] <= hi);
    }
  }

  TEST_CASE("KS test rejects a clearly non-uniform sample") {
    std::vector<double> v(500);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow((i + 0.5) / 500.0, 2.0);
    const auto r = ks_uniform_test(v);
    CHECK(r.p_value < 1e-6);
    CHECK(r.statistic == doctest::Approx(0.25).epsilon(0.01));  // sup |x^2 - x| at x = 0.5
  }

  TEST_CASE("binomial band brackets p and narrows with n") {
    const auto [lo1, hi1] = binomial_band(100, 0.3);
    const auto [lo2, hi2] = binomial_band(10000, 0.3);
    CHECK(lo1 < 0.3);
    CHECK(hi1 > 0.3);
    CHECK(hi2 - lo2 < hi1 - lo1);
  }
}

TEST_SUITE("bootstrap") {
  TEST_CASE("mean standard error matches the Bernoulli formula") {
    Rng rng(5);
    std::vector<double> v(400);
    for (auto& x : v) x = rng.uniform() < 0.3 ? 1.0 : 0.0;
    const double p = std::accumulate(v.begin(), v.end(), 0.0) / 400.0;
    const auto r = bootstrap_mean(v, 2000, 9);
    CHECK(r.estimate == doctest::Approx(p));
    CHECK(r.standard_error == doctest::Approx(std::sqrt(p * (1.0 - p) / 400.0)).epsilon(0.15));
    CHECK(r.lower == doctest::Approx(r.estimate - 2.0 * r.standard_error));
    CHECK(r.upper == doctest::Approx(r.estimate + 2.0 * r.standard_error));
  }

  TEST_CASE("resamples are deterministic and shared") {
    const auto a = bootstrap_indices(30, 50, 3);
    const auto b = bootstrap_indices(30, 50, 3);
    CHECK(a == b);
    CHECK(a != bootstrap_indices(30, 50, 4));
    for (const auto& row : a) {
      CHECK(row.size() == 30);
      for (auto i : row) CHECK(i < 30);
    }
  }
}

TEST_SUITE("stratification") {
  TEST_CASE("majority month with ties to the earlier month") {
    const auto& w1 = canonical_horizons()[0];
    // Issue 2012-01-27: days 28..31 Jan (4) and 1..3 Feb (3).
    CHECK(majority_month(make_date(2012, 1, 27), w1) == std::pair<int, unsigned>{2012, 1});
    // Issue 2012-01-28: 29..31 Jan (3), 1..4 Feb (4).
    CHECK(majority_month(make_date(2012, 1, 28), w1) == std::pair<int, unsigned>{2012, 2});
    // 14-day window 2012-12-25 .. 2013-01-07: 7 days each side, tie to December.
    CHECK(majority_month(make_date(2012, 12, 24), horizon_by_name("2 Weeks")) == std::pair<int, unsigned>{2012, 12});
  }

  TEST_CASE("seasons and NAO phases partition the cases") {
    MonthlyIndex nao;
    Rng rng(6);
    for (int y = 2010; y <= 2013; ++y) {
      for (unsigned m = 1; m <= 12; ++m) nao.set(y, m, 1.5 * rng.normal());
    }
    std::vector<SkillCase> cases;
    for (int i = 0; i < 300; ++i) cases.push_back(make_case(make_date(2010, 1, 4) + std::chrono::days{4 * i}, 0.5, 1.0));
    std::size_t summer = 0;
    std::size_t winter = 0;
    std::size_t pos = 0;
    std::size_t neg = 0;
    std::size_t neutral = 0;
    for (const auto& c : cases) {
      const bool s = in_stratum(c, {Season::Summer, NaoPhase::Any}, nullptr);
      const bool w = in_stratum(c, {Season::Winter, NaoPhase::Any}, nullptr);
      CHECK(s != w);
      summer += s;
      winter += w;
      const bool p = in_stratum(c, {Season::All, NaoPhase::Positive}, &nao);
      const bool n = in_stratum(c, {Season::All, NaoPhase::Negative}, &nao);
      CHECK_FALSE((p && n));
      const auto [yy, mm] = majority_month(c.issue_date, c.horizon);
      const double v = *nao.get(yy, mm);
      CHECK(p == (v > 0.4));
      CHECK(n == (v < -0.4));
      pos += p;
      neg += n;
      neutral += !p && !n;
    }
    CHECK(summer + winter == cases.size());
    CHECK(pos + neg + neutral == cases.size());
    CHECK_THROWS_AS(in_stratum(cases[0], {Season::All, NaoPhase::Positive}, nullptr), InputError);
    MonthlyIndex empty;
    CHECK_FALSE(in_stratum(cases[0], {Season::All, NaoPhase::Negative}, &empty));
    CHECK(StratumFilter{Season::Winter, NaoPhase::Negative}.label() == "winter+nao_neg");
  }

  TEST_CASE("skill reports") {
    std::vector<SkillCase> cases;
    Rng rng(7);
    for (int i = 0; i < 400; ++i) {
      const Date d = make_date(2010, 1, 4) + std::chrono::days{4 * i};
      cases.push_back(make_case(d, 0.7 + 0.1 * rng.normal(), 1.0 + 0.1 * rng.normal()));
    }
    double fs = 0.0;
    double cs = 0.0;
    for (const auto& c : cases) {
      fs += c.forecast_crps;
      cs += c.climatology_crps;
    }
    const auto r = skill_report(cases);
    CHECK(r.fcrpss == doctest::Approx(1.0 - fs / cs).epsilon(1e-12));
    CHECK(r.lower < r.fcrpss);
    CHECK(r.upper > r.fcrpss);
    CHECK(r.skill_class == classify_skill(r.fcrpss));
    CHECK(r.n == 400);
    const auto f = fold_spread_report(cases);
    CHECK(f.spread_method == "fold-2sd");
    CHECK(f.fcrpss == doctest::Approx(r.fcrpss));
    CHECK_FALSE(stratified_skill(std::span(cases).first(30), {Season::Summer, NaoPhase::Any}, nullptr).has_value());
    const auto s = stratified_skill(cases, {Season::Summer, NaoPhase::Any}, nullptr);
    REQUIRE(s.has_value());
    CHECK(s->stratum == "summer");
    CHECK(s->n < 400);
  }
}
