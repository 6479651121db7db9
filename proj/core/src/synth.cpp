#include "s2sflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/parallel.hpp"
#include "s2sflow/random.hpp"

namespace s2sflow::synth {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kPrecipNoiseStream = 2;
constexpr std::uint64_t kInflowNoiseStream = 3;
constexpr std::uint64_t kNaoStream = 4;
constexpr std::uint64_t kMemberStream = 5;

// Marsaglia-Tsang; shapes below one use the u^(1/a) boost.
double gamma_draw(Rng& rng, double shape) {
  if (shape < 1.0) return gamma_draw(rng, shape + 1.0) * std::pow(rng.uniform(), 1.0 / shape);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double noise_draw(Rng& rng, NoiseFamily family, double cv) {
  if (cv == 0.0) return 1.0;
  if (family == NoiseFamily::Gamma) {
    const double shape = 1.0 / (cv * cv);
    return gamma_draw(rng, shape) / shape;
  }
  const double s2 = std::log1p(cv * cv);
  return std::exp(std::sqrt(s2) * rng.normal() - 0.5 * s2);
}

}  // namespace

void ScenarioConfig::validate() const {
  auto fail = [](const char* field, const std::string& why) {
    throw InputError(fmt::format("scenario.{}: {}", field, why));
  };
  if (years < 1) fail("years", "must be at least 1");
  if (members < 2) fail("members", "need at least 2 members");
  if (lead_days < kMaxHorizonDay) fail("lead_days", fmt::format("must cover {} days", kMaxHorizonDay));
  if (!(half_life_days > 0.0)) fail("half_life_days", "must be positive");
  if (fixed_weight && !(*fixed_weight >= 0.0 && *fixed_weight <= 1.0)) fail("fixed_weight", "must lie in [0, 1]");
  if (!(precip_mean_mm_day > 0.0)) fail("precip_mean_mm_day", "must be positive");
  if (!(seasonal_amplitude >= 0.0 && seasonal_amplitude < 1.0)) fail("seasonal_amplitude", "must lie in [0, 1)");
  if (!(signal_sd >= 0.0)) fail("signal_sd", "must be non-negative");
  if (!(std::abs(signal_ar1) < 1.0)) fail("signal_ar1", "must lie in (-1, 1)");
  if (!(std::abs(member_ar1) < 1.0)) fail("member_ar1", "must lie in (-1, 1)");
  if (!(std::abs(nao_ar1) < 1.0)) fail("nao_ar1", "must lie in (-1, 1)");
  if (!(noise_cv >= 0.0)) fail("noise_cv", "must be non-negative");
  if (!(inflow_noise_sd >= 0.0)) fail("inflow_noise_sd", "must be non-negative");
  if (!(inflow_drift >= 0.0)) fail("inflow_drift", "must be non-negative");
  if (!(inflow_scale_m3s > 0.0)) fail("inflow_scale_m3s", "must be positive");
}

double ScenarioConfig::weight(int lead_day) const {
  if (fixed_weight) return *fixed_weight;
  if (std::isinf(half_life_days)) return 1.0;
  return std::exp2(-static_cast<double>(lead_day) / half_life_days);
}

Scenario generate_scenario(const ScenarioConfig& cfg, bool keep_member_latent) {
  cfg.validate();
  const Date first = make_date(cfg.start_year, 1, 1);
  const Date record_end = make_date(cfg.start_year + cfg.years, 1, 1);  // exclusive
  const Date last = record_end + std::chrono::days{cfg.lead_days + 7};
  const auto n_days = static_cast<std::size_t>((last - first).count());

  Scenario sc;
  sc.precipitation.start = first;
  sc.latent.resize(n_days);

  // Latent AR(1), innovations drawn per calendar year so years can be
  // generated independently.
  std::vector<double> innov(n_days);
  std::vector<double> p_noise(n_days);
  std::vector<double> q_noise(n_days);
  {
    std::vector<std::size_t> year_start;
    for (std::size_t t = 0; t < n_days; ++t) {
      if (t == 0 || year_of(first + std::chrono::days{t}) != year_of(first + std::chrono::days{t - 1})) {
        year_start.push_back(t);
      }
    }
    year_start.push_back(n_days);
    parallel_for(year_start.size() - 1, static_cast<unsigned>(std::max(cfg.threads, 1)), [&](std::size_t y) {
      Rng r1(derive_seed(derive_seed(cfg.seed, kLatentStream), y));
      Rng r2(derive_seed(derive_seed(cfg.seed, kPrecipNoiseStream), y));
      Rng r3(derive_seed(derive_seed(cfg.seed, kInflowNoiseStream), y));
      for (std::size_t t = year_start[y]; t < year_start[y + 1]; ++t) {
        innov[t] = r1.normal();
        p_noise[t] = noise_draw(r2, cfg.noise_family, cfg.noise_cv);
        q_noise[t] = r3.normal();
      }
    });
  }
  const double phi = cfg.signal_ar1;
  const double innov_scale = std::sqrt(1.0 - phi * phi);
  sc.latent[0] = innov[0];
  for (std::size_t t = 1; t < n_days; ++t) sc.latent[t] = phi * sc.latent[t - 1] + innov_scale * innov[t];

  const double s = cfg.signal_sd;
  auto seasonal_mean = [&](Date d) {
    const double doy = static_cast<double>(day_of_year(d));
    return cfg.precip_mean_mm_day *
           (1.0 + cfg.seasonal_amplitude *
                      std::cos(2.0 * std::numbers::pi * (doy - cfg.seasonal_peak_day) / 365.25));
  };
  auto precip_from = [&](Date d, double latent, double noise) {
    return seasonal_mean(d) * std::exp(s * latent - 0.5 * s * s) * noise;
  };

  sc.precipitation.values.resize(n_days);
  sc.raw_inflow.resize(n_days);
  for (std::size_t t = 0; t < n_days; ++t) {
    const Date d = first + std::chrono::days{t};
    const double p = precip_from(d, sc.latent[t], p_noise[t]);
    sc.precipitation.values[t] = p;
    const double base = std::max(0.0, cfg.inflow_slope * p + cfg.inflow_intercept + cfg.inflow_noise_sd * q_noise[t]);
    sc.raw_inflow[t] = base - cfg.inflow_drift;
  }

  // Normalize by the mean over the record years only.
  const auto n_record = static_cast<std::size_t>((record_end - first).count());
  double mean = 0.0;
  for (std::size_t t = 0; t < n_record; ++t) mean += sc.raw_inflow[t];
  mean /= static_cast<double>(n_record);
  if (!(mean > 0.0)) throw InputError("scenario: mean inflow is not positive; reduce inflow_drift");
  sc.inflow.start = first;
  sc.inflow.step_days = 1;
  sc.inflow.normalization_constant = mean * cfg.inflow_scale_m3s;
  sc.inflow.values.resize(n_days);
  for (std::size_t t = 0; t < n_days; ++t) sc.inflow.values[t] = sc.raw_inflow[t] / mean;

  // Monthly NAO-like index, AR(1) with unit variance.
  {
    Rng rng(derive_seed(cfg.seed, kNaoStream));
    const double a = cfg.nao_ar1;
    double v = rng.normal();
    for (int y = cfg.start_year; y <= year_of(last); ++y) {
      for (unsigned m = 1; m <= 12; ++m) {
        sc.nao.set(y, m, v);
        v = a * v + std::sqrt(1.0 - a * a) * rng.normal();
      }
    }
  }

  // Ensemble forecasts on Mondays and Thursdays of the record years.
  const auto issues = twice_weekly_issue_dates(first, record_end - std::chrono::days{1});
  sc.forecasts.resize(issues.size());
  if (keep_member_latent) sc.member_latent.resize(issues.size());
  const double mphi = cfg.member_ar1;
  const double mscale = std::sqrt(1.0 - mphi * mphi);
  parallel_for(issues.size(), static_cast<unsigned>(std::max(cfg.threads, 1)), [&](std::size_t i) {
    Rng rng(derive_seed(derive_seed(cfg.seed, kMemberStream), i));
    auto& f = sc.forecasts[i];
    f.issue_date = issues[i];
    f.members.assign(static_cast<std::size_t>(cfg.members), std::vector<double>(static_cast<std::size_t>(cfg.lead_days)));
    if (keep_member_latent) {
      sc.member_latent[i].assign(static_cast<std::size_t>(cfg.members),
                                 std::vector<double>(static_cast<std::size_t>(cfg.lead_days)));
    }
    const auto base = static_cast<std::size_t>((issues[i] - first).count());
    for (int k = 0; k < cfg.members; ++k) {
      double e = 0.0;
      for (int d = 1; d <= cfg.lead_days; ++d) {
        e = d == 1 ? rng.normal() : mphi * e + mscale * rng.normal();
        const double w = cfg.weight(d);
        const std::size_t t = base + static_cast<std::size_t>(d);
        const double latent = w * sc.latent[t] + std::sqrt(std::max(0.0, 1.0 - w * w)) * e;
        const double noise = noise_draw(rng, cfg.noise_family, cfg.noise_cv);
        const auto ki = static_cast<std::size_t>(k);
        const auto di = static_cast<std::size_t>(d - 1);
        f.members[ki][di] = precip_from(issues[i] + std::chrono::days{d}, latent, noise);
        if (keep_member_latent) sc.member_latent[i][ki][di] = latent;
      }
    }
  });
  return sc;
}

// ------------------------------------------------------- telemetry mode

telemetry::PlantCurves default_plant_curves() {
  using telemetry::Grid2D;
  using telemetry::StorageCurve;
  telemetry::PlantCurves c;

  std::vector<double> levels;
  std::vector<double> volumes;
  for (int l = 160; l <= 240; l += 5) {
    levels.push_back(l);
    const double h = l - 150.0;
    // Surface area grows with level, so volume is convex in level.
    volumes.push_back(2.0e6 * h + 2.5e4 * h * h);
  }
  c.storage = StorageCurve(levels, volumes);

  const std::vector<double> powers = {0.0, 5e6, 1e7, 2e7, 3e7, 4e7};
  const std::vector<double> grid_levels = {160.0, 180.0, 200.0, 220.0, 240.0};
  std::vector<double> eff;
  std::vector<double> head;
  for (double p : powers) {
    for (double l : grid_levels) {
      const double load = p / 4e7;
      eff.push_back(0.80 + 0.12 * load * (2.0 - load) + 0.0005 * (l - 200.0));
      head.push_back(l - 120.0 - 4.0 * load * load);
    }
  }
  c.efficiency = Grid2D(powers, grid_levels, eff);
  c.net_head = Grid2D(powers, grid_levels, head);
  c.validate();
  return c;
}

telemetry::CompensationSchedule constant_compensation(Date first, Date last, double flow_m3s) {
  return telemetry::CompensationSchedule({telemetry::CompensationPeriod{first, last, flow_m3s}});
}

HourlyPath hourly_from_daily(Date start, std::span<const double> daily_m3s, double diurnal_amplitude) {
  HourlyPath path;
  path.times.reserve(daily_m3s.size() * 24);
  path.inflow_m3s.reserve(daily_m3s.size() * 24);
  const Instant t0 = std::chrono::time_point_cast<std::chrono::seconds>(start);
  for (std::size_t d = 0; d < daily_m3s.size(); ++d) {
    for (int h = 0; h < 24; ++h) {
      path.times.push_back(t0 + std::chrono::hours{static_cast<long>(d) * 24 + h});
      path.inflow_m3s.push_back(daily_m3s[d] *
                                (1.0 + diurnal_amplitude * std::sin(2.0 * std::numbers::pi * (h + 0.5) / 24.0)));
    }
  }
  return path;
}

std::vector<telemetry::TelemetryRecord> simulate_telemetry(const HourlyPath& path, const TelemetrySimConfig& cfg) {
  const std::size_t n = path.times.size();
  if (n < 2 || path.inflow_m3s.size() != n) throw InputError("telemetry simulation needs a path of 2 or more hours");
  const auto& curves = cfg.curves;
  const double h = 3600.0;
  const double rho_g = telemetry::kWaterDensity * telemetry::kGravity;
  const double p_max = curves.efficiency.powers().back();
  const double v_target = curves.storage.volume_at(cfg.target_level_m);

  std::vector<double> volume(n + 1);
  volume[0] = curves.storage.volume_at(cfg.initial_level_m);
  std::vector<telemetry::TelemetryRecord> out(n);

  double target_q = cfg.mean_discharge_m3s;
  double day_net = 0.0;
  int day_hours = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double level = curves.storage.level_at(volume[i]);
    const Date day = date_of(path.times[i]);
    const double comp = cfg.compensation.flow_on(day).value_or(0.0);

    if (i > 0 && date_of(path.times[i - 1]) != day) {
      // New day: previous day's mean net inflow plus a volume correction.
      const double correction = (volume[i] - v_target) / (cfg.level_feedback_hours * h);
      target_q = std::max(0.0, day_net / std::max(day_hours, 1) + correction);
      day_net = 0.0;
      day_hours = 0;
    }
    day_net += path.inflow_m3s[i] - comp;
    ++day_hours;

    // Power delivering target_q at the current level (two fixed-point passes).
    double p = 0.0;
    for (int it = 0; it < 3; ++it) {
      const double pc = std::clamp(p, 0.0, p_max);
      p = target_q * curves.efficiency.at(pc, level) * rho_g * curves.net_head.at(pc, level);
    }
    p = std::clamp(p, 0.0, p_max);
    const double q = telemetry::compute_discharge(p, curves.efficiency.at(p, level), curves.net_head.at(p, level));
    const double net = path.inflow_m3s[i] - q - comp;
    volume[i + 1] = i == 0 ? volume[0] + h * net : volume[i - 1] + 2.0 * h * net;
    if (volume[i + 1] < curves.storage.volumes().front() || volume[i + 1] > curves.storage.volumes().back()) {
      throw NumericalError(fmt::format("telemetry simulation left the storage curve at {}",
                                       format_instant(path.times[i])));
    }
    out[i] = {path.times[i], level, p};
  }
  return out;
}

}  // namespace s2sflow::synth
