#include "s2sflow/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/parallel.hpp"
#include "s2sflow/verification.hpp"

namespace s2sflow {

void PriceConfig::validate() const {
  if (!(differential > 0.0) || !std::isfinite(differential)) {
    throw InputError(fmt::format("differential = {} must be positive", differential));
  }
  if (!(peak_price > 0.0) || !std::isfinite(peak_price)) {
    throw InputError(fmt::format("peak_price = {} must be positive", peak_price));
  }
}

void OperatingEnvelope::validate() const {
  for (const auto& [name, v] : {std::pair{"free_up_frac", free_up_frac}, std::pair{"free_down_frac", free_down_frac},
                                std::pair{"stage2_up_frac", stage2_up_frac},
                                std::pair{"stage2_down_frac", stage2_down_frac},
                                std::pair{"energy_per_inflow", energy_per_inflow}}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(fmt::format("{} = {} must be positive", name, v));
  }
  if (!(max_capacity_frac > 1.0 + free_up_frac)) {
    throw InputError(fmt::format("max_capacity_frac = {} must exceed 1 + free_up_frac", max_capacity_frac));
  }
  if (!(clim_generation > 0.0) || !std::isfinite(clim_generation)) {
    throw InputError(fmt::format("clim_generation = {} must be positive", clim_generation));
  }
}

double stage1_cost(double A, const OperatingEnvelope& env, const PriceConfig& prices) {
  const double g = env.clim_generation;
  if (A > env.free_up_frac) {
    const double cap = env.max_adjustment();
    return prices.differential * (std::min(A, cap) - env.free_up_frac) * g +
           prices.peak_price * std::max(0.0, A - cap) * g;
  }
  if (A < -env.free_down_frac) return 0.5 * prices.differential * (-A - env.free_down_frac) * g;
  return 0.0;
}

double stage2_cost(double A, double inflow, const OperatingEnvelope& env, const PriceConfig& prices) {
  const double g = env.clim_generation;
  const double d = inflow - (1.0 + A) * g;
  const double up = env.stage2_up_frac * g;
  const double down = env.stage2_down_frac * g;
  if (d > up) {
    const double cap = env.max_capacity_frac * g;
    return prices.differential * (std::min(d, cap) - up) + prices.peak_price * std::max(0.0, d - cap);
  }
  if (d < -down) return 0.5 * prices.differential * (-d - down);
  return 0.0;
}

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw InputError("Gauss-Legendre needs at least one node");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  // P_n(x) and P_n'(x) by the three-term recurrence.
  auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    nodes[lo] = 0.5 * (1.0 - x);
    nodes[hi] = 0.5 * (1.0 + x);
    weights[lo] = 0.5 * w;
    weights[hi] = 0.5 * w;
  }
}

EnergyForecast EnergyForecast::point(double energy) { return EnergyForecast{{energy}, {1.0}}; }

EnergyForecast EnergyForecast::from_zaga(const ZagaDistribution& dist, double energy_scale, int nodes) {
  dist.validate();
  EnergyForecast f;
  if (dist.nu > 0.0) {
    f.energy.push_back(-dist.offset * energy_scale);
    f.weight.push_back(dist.nu);
  }
  std::vector<double> u;
  std::vector<double> w;
  gauss_legendre_unit(nodes, u, w);
  for (std::size_t i = 0; i < u.size(); ++i) {
    f.energy.push_back((dist.gamma_quantile(u[i]) - dist.offset) * energy_scale);
    f.weight.push_back((1.0 - dist.nu) * w[i]);
  }
  return f;
}

void EnergyForecast::validate() const {
  if (energy.empty() || energy.size() != weight.size()) throw InputError("energy forecast: bad atom list");
  double s = 0.0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    if (!std::isfinite(energy[i]) || !(weight[i] >= 0.0)) throw InputError("energy forecast: invalid atom");
    s += weight[i];
  }
  if (std::abs(s - 1.0) > 1e-9) throw InputError(fmt::format("energy forecast weights sum to {}", s));
}

double expected_stage2(double A, const EnergyForecast& forecast, const OperatingEnvelope& env,
                       const PriceConfig& prices) {
  double e = 0.0;
  for (std::size_t i = 0; i < forecast.energy.size(); ++i) {
    e += forecast.weight[i] * stage2_cost(A, forecast.energy[i], env, prices);
  }
  return e;
}

const char* to_string(ForecastType t) {
  switch (t) {
    case ForecastType::Climatological: return "climatological";
    case ForecastType::Deterministic: return "deterministic";
    case ForecastType::Probabilistic: return "probabilistic";
  }
  return "climatological";
}

AdjustmentDecision optimal_adjustment(const EnergyForecast& forecast, const OperatingEnvelope& env,
                                      const PriceConfig& prices, ForecastType type) {
  const double lo = env.min_adjustment();
  const double hi = env.max_adjustment();
  const double g = env.clim_generation;
  const double diff = prices.differential;

  // The objective is piecewise linear in A. Each event is a kink (position,
  // change of slope); the spill kink lowers the slope when the differential
  // exceeds the peak price, so no convexity is assumed.
  std::vector<std::pair<double, double>> events = {
      {-env.free_down_frac, 0.5 * diff * g}, {env.free_up_frac, diff * g}, {0.0, 0.0}, {lo, 0.0}, {hi, 0.0}};
  events.reserve(5 + 3 * forecast.energy.size());
  for (std::size_t i = 0; i < forecast.energy.size(); ++i) {
    const double w = forecast.weight[i] * g;
    const double base = forecast.energy[i] / g - 1.0;
    events.emplace_back(base - env.max_capacity_frac, (prices.peak_price - diff) * w);
    events.emplace_back(base - env.stage2_up_frac, diff * w);
    events.emplace_back(base + env.stage2_down_frac, 0.5 * diff * w);
  }
  std::sort(events.begin(), events.end());

  // Slope just right of lo.
  double slope = -0.5 * diff * g - prices.peak_price * g;  // limit as A -> -infinity
  std::size_t k = 0;
  while (k < events.size() && events[k].first <= lo) slope += events[k++].second;

  auto objective = [&](double a) { return stage1_cost(a, env, prices) + expected_stage2(a, forecast, env, prices); };
  std::vector<double> pos = {lo};
  std::vector<double> val = {objective(lo)};
  while (k < events.size() && events[k].first <= hi) {
    const double x = events[k].first;
    if (x > pos.back()) {
      val.push_back(val.back() + slope * (x - pos.back()));
      pos.push_back(x);
    }
    slope += events[k++].second;
  }

  const double fmin = *std::min_element(val.begin(), val.end());
  const double tol = 1e-10 * (1.0 + std::abs(fmin) + diff * g);
  double a = pos.front();
  bool found = false;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (val[j] > fmin + tol) continue;
    if (!found || std::abs(pos[j]) < std::abs(a)) a = pos[j];
    found = true;
  }
  return {a, objective(a), type};
}

CostBreakdown realized_cost(const AdjustmentDecision& decision, double observed_energy, const OperatingEnvelope& env,
                            const PriceConfig& prices) {
  CostBreakdown c;
  c.stage1 = stage1_cost(decision.A, env, prices);
  c.stage2 = stage2_cost(decision.A, observed_energy, env, prices);
  c.total = c.stage1 + c.stage2;
  return c;
}

double water_value(std::span<const double> total_costs, std::span<const double> clim_generation, double peak_price) {
  if (total_costs.empty() || total_costs.size() != clim_generation.size()) {
    throw InputError("water value: need matching, non-empty cost and generation lists");
  }
  const double g = std::accumulate(clim_generation.begin(), clim_generation.end(), 0.0);
  const double c = std::accumulate(total_costs.begin(), total_costs.end(), 0.0);
  if (!(g > 0.0)) throw NumericalError("water value: total climatological generation is not positive");
  return (g * peak_price - c) / g;
}

std::vector<CaseDecision> evaluate_cases(std::span<const CostCase> cases, const OperatingEnvelope& env,
                                         const PriceConfig& prices, int threads) {
  prices.validate();
  std::vector<CaseDecision> out(cases.size() * kForecastTypes.size());
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    const auto& c = cases[i];
    const auto e = env.with_generation(c.clim_generation);
    e.validate();
    for (std::size_t t = 0; t < kForecastTypes.size(); ++t) {
      const auto d = optimal_adjustment(c.forecasts[t], e, prices, kForecastTypes[t]);
      auto& row = out[i * kForecastTypes.size() + t];
      row.issue_date = c.issue_date;
      row.horizon = c.horizon;
      row.type = kForecastTypes[t];
      row.A = d.A;
      row.cost = realized_cost(d, c.observed_energy, e, prices);
    }
  });
  return out;
}

std::vector<double> SweepOptions::default_differentials() {
  std::vector<double> d;
  for (int v = 5; v <= 100; v += 5) d.push_back(v);
  return d;
}

namespace {

struct ValueStats {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  [[nodiscard]] double sd() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

}  // namespace

std::vector<ValueRow> price_sweep(std::span<const CostCase> cases, const OperatingEnvelope& env,
                                  const SweepOptions& options) {
  if (cases.empty()) throw InputError("price sweep: no cases");
  const std::size_t n = cases.size();
  const std::size_t nt = kForecastTypes.size();
  const auto resamples = bootstrap_indices(n, options.replicates, options.seed);

  std::vector<double> gen(n);
  for (std::size_t i = 0; i < n; ++i) gen[i] = cases[i].clim_generation;

  std::vector<ValueRow> rows;
  for (double diff : options.differentials) {
    const PriceConfig prices{options.peak_price, diff};
    const auto decisions = evaluate_cases(cases, env, prices, options.threads);
    std::array<std::vector<double>, 3> totals;
    for (std::size_t t = 0; t < nt; ++t) {
      totals[t].resize(n);
      for (std::size_t i = 0; i < n; ++i) totals[t][i] = decisions[i * nt + t].cost.total;
    }
    std::array<ValueStats, 3> wv_stats;
    std::array<ValueStats, 3> gain_stats;
    for (const auto& idx : resamples) {
      double g = 0.0;
      std::array<double, 3> c{};
      for (auto i : idx) {
        g += gen[i];
        for (std::size_t t = 0; t < nt; ++t) c[t] += totals[t][i];
      }
      const double base = (g * options.peak_price - c[0]) / g;
      for (std::size_t t = 0; t < nt; ++t) {
        const double v = (g * options.peak_price - c[t]) / g;
        wv_stats[t].add(v);
        gain_stats[t].add(v - base);
      }
    }
    const double clim_value = water_value(totals[0], gen, options.peak_price);
    for (std::size_t t = 0; t < nt; ++t) {
      ValueRow r;
      r.type = kForecastTypes[t];
      r.horizon = cases.front().horizon;
      r.differential = diff;
      r.water_value = water_value(totals[t], gen, options.peak_price);
      r.se = wv_stats[t].sd();
      r.gain = r.water_value - clim_value;
      r.gain_se = gain_stats[t].sd();
      r.n = n;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace s2sflow
