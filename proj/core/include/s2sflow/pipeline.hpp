#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2sflow/cost_model.hpp"
#include "s2sflow/emos.hpp"
#include "s2sflow/forecast_data.hpp"
#include "s2sflow/regression.hpp"
#include "s2sflow/verification.hpp"

namespace s2sflow::pipeline {

struct TrainOptions {
  std::vector<HorizonSpec> horizons = canonical_horizons();
  CvOptions cv;
  EmosFitOptions emos;
  unsigned threads = 1;
};

/// Cross-validated models: one regression per fold year and one EMOS model
/// per (fold year, horizon). The EMOS model for fold Y is trained on the
/// fold-Y regression's benchmark forecasts for issues outside {Y, Y + 1},
/// so no fold ever sees data from its own year or the next.
struct TrainedModels {
  std::vector<LinearInflowModel> regressions;  // ascending fold year
  std::vector<int> fold_years;
  std::vector<EmosModel> emos;                 // fold-major, horizon order of `horizons`
  std::vector<HorizonSpec> horizons;

  [[nodiscard]] const LinearInflowModel* regression_for(int year) const;
  [[nodiscard]] const EmosModel* emos_for(int year, const std::string& horizon) const;
};

TrainedModels train(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                    const TrainOptions& options = {});

/// Benchmark members of `f` under a regression, without the leakage guard.
/// Used for EMOS training cases, which deliberately come from years the
/// regression saw.
std::vector<double> regression_members(const EnsemblePrecipForecast& f, const HorizonSpec& h,
                                       const LinearInflowModel& model);

/// One out-of-sample forecast.
struct ForecastCase {
  Date issue_date;
  HorizonSpec horizon;
  int fold_year = 0;
  std::vector<double> benchmark;  // regression ensemble, normalized inflow
  ZagaDistribution dist;          // calibrated forecast (user units via offset)
  double observed = kMissing;
};

/// Applies the fold models to every forecast whose issue year has a fold.
/// `inflow`, when given, fills the observed horizon mean.
std::vector<ForecastCase> apply(const TrainedModels& models, std::span<const EnsemblePrecipForecast> forecasts,
                                const DailySeries* inflow);

struct ScoreOptions {
  int crps_levels = 1024;
  std::size_t min_climatology_years = 3;
  unsigned threads = 1;
};

/// A forecast case with its scores and climatological sample.
struct ScoredCase {
  ForecastCase forecast;
  std::vector<double> climatology;  // horizon means for the issue month
  double crps_emos = 0.0;
  double crps_benchmark = 0.0;
  double crps_climatology = 0.0;
};

/// Scores every case that has an observation and an admissible
/// climatology; others are dropped.
std::vector<ScoredCase> score(std::span<const ForecastCase> cases, const DailySeries& inflow,
                              const ScoreOptions& options = {});

enum class ForecastSource { Emos, Benchmark };

/// Skill cases for one horizon name.
std::vector<SkillCase> skill_cases(std::span<const ScoredCase> scored, const std::string& horizon,
                                   ForecastSource source = ForecastSource::Emos);

/// Per-horizon skill in `horizons` order (horizons with too few cases are
/// omitted).
std::vector<SkillReport> horizon_skill(std::span<const ScoredCase> scored, std::span<const HorizonSpec> horizons,
                                       ForecastSource source, const SkillOptions& options);

/// Cost-model inputs: climatological generation is the climatology median
/// converted to energy, the deterministic forecast is the predictive median.
std::vector<CostCase> cost_cases(std::span<const ScoredCase> scored, const std::string& horizon,
                                 const OperatingEnvelope& env, int quadrature_nodes = 256);

}  // namespace s2sflow::pipeline
