#include "s2sflow/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/parallel.hpp"

namespace s2sflow {

bool LinearInflowModel::excludes(int year) const {
  return std::binary_search(excluded_years.begin(), excluded_years.end(), year);
}

LinearInflowModel fit_linear(std::span<const TrainingPair> pairs, std::vector<int> excluded_years,
                             std::size_t min_pairs) {
  if (pairs.size() < min_pairs) {
    throw InputError(fmt::format("linear regression: {} training pairs, need at least {}", pairs.size(), min_pairs));
  }
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pairs) {
    mx += p.precip_mm_day;
    my += p.inflow;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, sx2 = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.precip_mm_day - mx;
    sxx += dx * dx;
    sxy += dx * (p.inflow - my);
    sx2 += p.precip_mm_day * p.precip_mm_day;
  }
  if (!(sxx > 1e-24 * sx2)) {
    throw InputError("linear regression: precipitation has zero variance");
  }
  LinearInflowModel m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  std::sort(excluded_years.begin(), excluded_years.end());
  m.excluded_years = std::move(excluded_years);
  m.n_pairs = pairs.size();
  if (!std::isfinite(m.slope) || !std::isfinite(m.intercept)) {
    throw NumericalError("linear regression: non-finite coefficients");
  }
  return m;
}

std::vector<TrainingPair> build_week1_pairs(std::span<const EnsemblePrecipForecast> forecasts,
                                            const DailySeries& inflow, PairMode mode,
                                            std::span<const int> excluded_years) {
  const HorizonSpec& week1 = canonical_horizons().front();
  std::vector<TrainingPair> pairs;
  for (const auto& f : forecasts) {
    const int y = year_of(f.issue_date);
    if (std::find(excluded_years.begin(), excluded_years.end(), y) != excluded_years.end()) continue;
    const double obs = observed_horizon_mean(inflow, f.issue_date, week1);
    if (is_missing(obs)) continue;
    const auto precip = horizon_average(f, week1);
    if (mode == PairMode::MemberWise) {
      for (double p : precip) pairs.push_back({f.issue_date, p, obs});
    } else {
      const double mean = std::accumulate(precip.begin(), precip.end(), 0.0) / static_cast<double>(precip.size());
      pairs.push_back({f.issue_date, mean, obs});
    }
  }
  return pairs;
}

LinearInflowModel fit_week1_regression(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                                       PairMode mode, std::vector<int> excluded_years, std::size_t min_pairs) {
  const auto pairs = build_week1_pairs(forecasts, inflow, mode, excluded_years);
  return fit_linear(pairs, std::move(excluded_years), min_pairs);
}

BenchmarkEnsembleForecast generate_benchmark(const EnsemblePrecipForecast& f, const HorizonSpec& h,
                                             const LinearInflowModel& model) {
  const int y = year_of(f.issue_date);
  if (!model.excludes(y)) {
    throw InputError(fmt::format("leakage: regression model was not trained with year {} excluded (issue {})", y,
                                 format_date(f.issue_date)));
  }
  BenchmarkEnsembleForecast out{f.issue_date, h, horizon_average(f, h)};
  for (double& m : out.members) m = model.predict(m);
  return out;
}

std::vector<int> excluded_years_for(int forecast_year) { return {forecast_year, forecast_year + 1}; }

std::vector<CvFold> run_cross_validation(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                                         std::span<const HorizonSpec> horizons, const CvOptions& options) {
  const HorizonSpec& week1 = canonical_horizons().front();
  std::set<int> year_set;
  for (const auto& f : forecasts) {
    if (!is_missing(observed_horizon_mean(inflow, f.issue_date, week1))) year_set.insert(year_of(f.issue_date));
  }
  if (year_set.size() < options.min_years) {
    throw InputError(fmt::format("cross-validation: {} years with overlapping forecasts and inflow, need {}",
                                 year_set.size(), options.min_years));
  }
  const std::vector<int> years(year_set.begin(), year_set.end());
  std::vector<CvFold> folds(years.size());
  parallel_for(years.size(), options.threads, [&](std::size_t i) {
    CvFold& fold = folds[i];
    fold.year = years[i];
    fold.model = fit_week1_regression(forecasts, inflow, options.mode, excluded_years_for(fold.year),
                                      options.min_pairs);
    for (const auto& f : forecasts) {
      if (year_of(f.issue_date) != fold.year) continue;
      for (const auto& h : horizons) fold.forecasts.push_back(generate_benchmark(f, h, fold.model));
    }
  });
  return folds;
}

}  // namespace s2sflow
