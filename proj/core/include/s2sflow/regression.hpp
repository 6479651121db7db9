#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s2sflow/forecast_data.hpp"

namespace s2sflow {

struct TrainingPair {
  Date issue_date;
  double precip_mm_day = 0.0;
  double inflow = 0.0;  // normalized
};

/// How week-1 ensemble precipitation is paired with the observed inflow.
enum class PairMode {
  MemberWise,    // one pair per member per issue
  EnsembleMean,  // one pair per issue, using the ensemble-mean precipitation
};

struct LinearInflowModel {
  double slope = 0.0;      // normalized inflow per mm/day
  double intercept = 0.0;  // normalized inflow
  std::vector<int> excluded_years;  // ascending
  std::size_t n_pairs = 0;

  [[nodiscard]] bool excludes(int year) const;
  [[nodiscard]] double predict(double precip_mm_day) const { return slope * precip_mm_day + intercept; }
};

/// Ordinary least squares. Throws InputError with fewer than `min_pairs`
/// pairs or (numerically) zero precipitation variance.
LinearInflowModel fit_linear(std::span<const TrainingPair> pairs, std::vector<int> excluded_years,
                             std::size_t min_pairs = 30);

/// Week-1 (days 1-7) precipitation paired with the observed 7-day mean
/// inflow, skipping issues in `excluded_years` and issues without a fully
/// observed week-1 window.
std::vector<TrainingPair> build_week1_pairs(std::span<const EnsemblePrecipForecast> forecasts,
                                            const DailySeries& inflow, PairMode mode,
                                            std::span<const int> excluded_years);

LinearInflowModel fit_week1_regression(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                                       PairMode mode, std::vector<int> excluded_years, std::size_t min_pairs = 30);

struct BenchmarkEnsembleForecast {
  Date issue_date;
  HorizonSpec horizon;
  std::vector<double> members;  // normalized inflow; may be negative
};

/// member_k = slope * horizon_average(f, h)_k + intercept. Throws InputError
/// if the model was trained on data from the issue year (leakage).
BenchmarkEnsembleForecast generate_benchmark(const EnsemblePrecipForecast& f, const HorizonSpec& h,
                                             const LinearInflowModel& model);

/// Years left out when forecasting year Y: {Y, Y + 1}.
std::vector<int> excluded_years_for(int forecast_year);

struct CvFold {
  int year = 0;
  LinearInflowModel model;
  std::vector<BenchmarkEnsembleForecast> forecasts;  // all issues in `year`, all horizons
};

struct CvOptions {
  PairMode mode = PairMode::MemberWise;
  std::size_t min_years = 4;
  std::size_t min_pairs = 30;
  unsigned threads = 1;
};

/// Leave-two-years-out cross-validation: for each year Y with observations,
/// fit on every other year except Y + 1 and forecast every issue in Y.
std::vector<CvFold> run_cross_validation(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                                         std::span<const HorizonSpec> horizons, const CvOptions& options = {});

}  // namespace s2sflow
