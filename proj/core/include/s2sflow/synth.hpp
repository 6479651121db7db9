#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "s2sflow/forecast_data.hpp"
#include "s2sflow/telemetry.hpp"
#include "s2sflow/verification.hpp"

namespace s2sflow::synth {

enum class NoiseFamily { Gamma, Lognormal };

/// Synthetic truth, inflow and ensemble generator.
///
/// Daily precipitation is m(t) * S(t) * G(t): a sinusoidal seasonal mean,
/// a lognormal signal S = exp(s * a(t) - s^2 / 2) driven by a unit-variance
/// AR(1) latent a(t), and unit-mean conditional noise G. Member k at lead d
/// replaces a(t) by w(d) * a(t) + sqrt(1 - w(d)^2) * e_k(d), with e_k an
/// independent AR(1) path over leads and w(d) = 2^(-d / half_life), and
/// draws its own noise. At w = 1 the members are exchangeable with the
/// truth; at w = 0 they are climatological draws.
struct ScenarioConfig {
  int start_year = 2009;
  int years = 10;

  double precip_mean_mm_day = 4.0;
  double seasonal_amplitude = 0.35;  // relative; the maximum falls on `seasonal_peak_day`
  double seasonal_peak_day = 15.0;
  double signal_sd = 0.6;            // s, SD of the log signal
  double signal_ar1 = 0.8;           // daily autocorrelation of a(t)
  NoiseFamily noise_family = NoiseFamily::Gamma;
  double noise_cv = 0.6;             // coefficient of variation of G

  double inflow_slope = 0.25;        // raw inflow per mm/day
  double inflow_intercept = 0.1;
  double inflow_drift = 0.0;         // subtracted after truncation at zero
  double inflow_noise_sd = 0.15;
  double inflow_scale_m3s = 12.0;    // raw units to m^3/s for telemetry mode

  int members = 11;
  int lead_days = 46;
  double half_life_days = 10.0;
  std::optional<double> fixed_weight;  // overrides w(d) at every lead when set
  double member_ar1 = 0.8;

  double nao_ar1 = 0.3;              // month-to-month autocorrelation of the index

  std::uint64_t seed = 42;
  int threads = 1;

  /// Throws InputError naming the offending field.
  void validate() const;
  [[nodiscard]] double weight(int lead_day) const;
};

struct Scenario {
  DailySeries precipitation;             // truth (reanalysis-like), mm/day
  telemetry::InflowSeries inflow;        // daily, normalized
  std::vector<double> raw_inflow;        // un-normalized, aligned with `inflow`
  std::vector<EnsemblePrecipForecast> forecasts;
  MonthlyIndex nao;
  std::vector<double> latent;            // a(t), aligned with `precipitation`
  /// member_latent[i][k][d - 1]: member k's latent for issue i at lead d.
  std::vector<std::vector<std::vector<double>>> member_latent;
};

/// Pure function of the config: the same seed gives a bit-identical result
/// regardless of `threads`.
Scenario generate_scenario(const ScenarioConfig& config, bool keep_member_latent = false);

// ------------------------------------------------------- telemetry mode

struct TelemetrySimConfig {
  telemetry::PlantCurves curves;
  telemetry::CompensationSchedule compensation;
  double initial_level_m = 200.0;
  double target_level_m = 200.0;
  double level_feedback_hours = 240.0;  // time scale for steering volume back to target
  double mean_discharge_m3s = 10.0;
};

/// Storage, efficiency and head tables for a mid-sized upland plant.
telemetry::PlantCurves default_plant_curves();
/// One compensation period of `flow` m^3/s covering [first, last].
telemetry::CompensationSchedule constant_compensation(Date first, Date last, double flow_m3s);

struct HourlyPath {
  std::vector<Instant> times;
  std::vector<double> inflow_m3s;
};

/// Hourly path whose daily means equal `daily_m3s` (a small diurnal cycle
/// with zero daily mean is superimposed).
HourlyPath hourly_from_daily(Date start, std::span<const double> daily_m3s, double diurnal_amplitude = 0.1);

/// Forward-simulates level and power from an inflow path. Volumes follow
/// V[i+1] = V[i-1] + 2h * (inflow - discharge - compensation)[i] (one
/// forward step at the start), which is the exact inverse of the central
/// difference used by reconstruction everywhere except the final record.
/// Discharge is steered once a day towards the previous day's mean net
/// inflow plus a correction pulling the volume back to target.
std::vector<telemetry::TelemetryRecord> simulate_telemetry(const HourlyPath& path, const TelemetrySimConfig& config);

}  // namespace s2sflow::synth
