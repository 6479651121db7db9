#include "s2sflow/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/parallel.hpp"

namespace s2sflow::pipeline {

const LinearInflowModel* TrainedModels::regression_for(int year) const {
  const auto it = std::lower_bound(fold_years.begin(), fold_years.end(), year);
  if (it == fold_years.end() || *it != year) return nullptr;
  return &regressions[static_cast<std::size_t>(it - fold_years.begin())];
}

const EmosModel* TrainedModels::emos_for(int year, const std::string& horizon) const {
  for (const auto& m : emos) {
    if (m.fold_year == year && m.horizon.name == horizon) return &m;
  }
  return nullptr;
}

std::vector<double> regression_members(const EnsemblePrecipForecast& f, const HorizonSpec& h,
                                       const LinearInflowModel& model) {
  auto members = horizon_average(f, h);
  for (double& m : members) m = model.predict(m);
  return members;
}

TrainedModels train(std::span<const EnsemblePrecipForecast> forecasts, const DailySeries& inflow,
                    const TrainOptions& options) {
  CvOptions cv = options.cv;
  cv.threads = options.threads;
  // Only the fold models are needed here; benchmark forecasts are rebuilt by apply().
  const auto folds = run_cross_validation(forecasts, inflow, {}, cv);

  TrainedModels out;
  out.horizons = options.horizons;
  for (const auto& fold : folds) {
    out.fold_years.push_back(fold.year);
    out.regressions.push_back(fold.model);
  }

  const std::size_t nh = options.horizons.size();
  out.emos.resize(folds.size() * nh);
  parallel_for(out.emos.size(), options.threads, [&](std::size_t job) {
    const auto& fold = folds[job / nh];
    const auto& h = options.horizons[job % nh];
    std::vector<EmosCase> cases;
    for (const auto& f : forecasts) {
      if (fold.model.excludes(year_of(f.issue_date))) continue;
      const double obs = observed_horizon_mean(inflow, f.issue_date, h);
      if (is_missing(obs)) continue;
      const auto members = regression_members(f, h, fold.model);
      cases.push_back({compute_features(members), SeasonalSplineBasis::day_offset(f.issue_date), obs});
    }
    out.emos[job] = fit_emos(cases, h, fold.year, options.emos);
  });
  return out;
}

std::vector<ForecastCase> apply(const TrainedModels& models, std::span<const EnsemblePrecipForecast> forecasts,
                                const DailySeries* inflow) {
  std::vector<ForecastCase> out;
  for (const auto& f : forecasts) {
    const int year = year_of(f.issue_date);
    const LinearInflowModel* reg = models.regression_for(year);
    if (reg == nullptr) continue;
    for (const auto& h : models.horizons) {
      const EmosModel* em = models.emos_for(year, h.name);
      if (em == nullptr) throw InputError(fmt::format("no EMOS model for fold {} horizon '{}'", year, h.name));
      ForecastCase c;
      c.issue_date = f.issue_date;
      c.horizon = h;
      c.fold_year = year;
      c.benchmark = generate_benchmark(f, h, *reg).members;
      c.dist = em->predict(compute_features(c.benchmark), f.issue_date);
      if (inflow != nullptr) c.observed = observed_horizon_mean(*inflow, f.issue_date, h);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<ScoredCase> score(std::span<const ForecastCase> cases, const DailySeries& inflow,
                              const ScoreOptions& options) {
  const auto candidates = twice_weekly_issue_dates(inflow.start, inflow.end() - std::chrono::days{1});

  // Climatologies depend only on (horizon, month, year); build each once.
  using Key = std::tuple<std::string, unsigned, int>;
  std::map<Key, std::optional<std::vector<double>>> clim;
  for (const auto& c : cases) {
    if (is_missing(c.observed)) continue;
    const Key key{c.horizon.name, month_of(c.issue_date), year_of(c.issue_date)};
    if (clim.contains(key)) continue;
    try {
      clim[key] = build_climatology(inflow, c.horizon, month_of(c.issue_date), year_of(c.issue_date), candidates,
                                    options.min_climatology_years)
                      .values;
    } catch (const InputError&) {
      clim[key] = std::nullopt;
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    if (is_missing(c.observed)) continue;
    const auto& sample = clim.at({c.horizon.name, month_of(c.issue_date), year_of(c.issue_date)});
    if (sample && sample->size() >= 2) keep.push_back(i);
  }

  std::vector<ScoredCase> out(keep.size());
  parallel_for(keep.size(), options.threads, [&](std::size_t j) {
    const auto& c = cases[keep[j]];
    auto& s = out[j];
    s.forecast = c;
    s.climatology = *clim.at({c.horizon.name, month_of(c.issue_date), year_of(c.issue_date)});
    s.crps_emos = crps_parametric(c.dist, c.observed, options.crps_levels);
    s.crps_benchmark = fair_crps_ensemble(c.benchmark, c.observed);
    s.crps_climatology = fair_crps_ensemble(s.climatology, c.observed);
  });
  return out;
}

std::vector<SkillCase> skill_cases(std::span<const ScoredCase> scored, const std::string& horizon,
                                   ForecastSource source) {
  std::vector<SkillCase> out;
  for (const auto& s : scored) {
    if (s.forecast.horizon.name != horizon) continue;
    out.push_back({s.forecast.issue_date, s.forecast.horizon, s.forecast.observed,
                   source == ForecastSource::Emos ? s.crps_emos : s.crps_benchmark, s.crps_climatology});
  }
  return out;
}

std::vector<SkillReport> horizon_skill(std::span<const ScoredCase> scored, std::span<const HorizonSpec> horizons,
                                       ForecastSource source, const SkillOptions& options) {
  std::vector<SkillReport> out;
  for (const auto& h : horizons) {
    const auto cases = skill_cases(scored, h.name, source);
    if (cases.size() < options.min_cases) continue;
    out.push_back(skill_report(cases, options));
  }
  return out;
}

std::vector<CostCase> cost_cases(std::span<const ScoredCase> scored, const std::string& horizon,
                                 const OperatingEnvelope& env, int quadrature_nodes) {
  std::vector<CostCase> out;
  for (const auto& s : scored) {
    if (s.forecast.horizon.name != horizon) continue;
    const int days = s.forecast.horizon.length();
    const double scale = days * env.energy_per_inflow;
    std::vector<double> sample = s.climatology;
    const auto mid = sample.begin() + static_cast<std::ptrdiff_t>(sample.size() / 2);
    std::nth_element(sample.begin(), mid, sample.end());
    double median = *mid;
    if (sample.size() % 2 == 0) median = 0.5 * (median + *std::max_element(sample.begin(), mid));
    const double g = median * scale;
    if (!(g > 0.0)) continue;  // the model needs a positive planned generation

    CostCase c;
    c.issue_date = s.forecast.issue_date;
    c.horizon = horizon;
    c.clim_generation = g;
    c.observed_energy = s.forecast.observed * scale;
    c.forecasts[0] = EnergyForecast::point(g);
    c.forecasts[1] = EnergyForecast::point(s.forecast.dist.user_quantile(0.5) * scale);
    c.forecasts[2] = EnergyForecast::from_zaga(s.forecast.dist, scale, quadrature_nodes);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace s2sflow::pipeline
