#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2sflow/dates.hpp"
#include "s2sflow/zaga.hpp"

namespace s2sflow {

/// Energy prices in GBP/MWh. The off-peak price is peak - differential and
/// may be negative.
struct PriceConfig {
  double peak_price = 50.0;
  double differential = 30.0;

  [[nodiscard]] double off_peak() const { return peak_price - differential; }
  void validate() const;
};

/// Stylised reservoir operating rules. Fractions are relative to the
/// climatological generation over the forecast horizon.
struct OperatingEnvelope {
  double clim_generation = 100.0;  // MWh per horizon
  double free_up_frac = 0.20;
  double free_down_frac = 0.20;
  double stage2_up_frac = 0.20;
  double stage2_down_frac = 0.50;
  double max_capacity_frac = 2.4;  // full-capacity generation as a multiple of clim_generation
  double energy_per_inflow = 1.0;  // MWh per unit normalized inflow per day

  [[nodiscard]] double min_adjustment() const { return -1.0; }
  [[nodiscard]] double max_adjustment() const { return max_capacity_frac - 1.0; }
  /// Throws InputError for non-positive fractions or capacity <= 1 + free_up_frac.
  void validate() const;
  [[nodiscard]] OperatingEnvelope with_generation(double g) const {
    OperatingEnvelope e = *this;
    e.clim_generation = g;
    return e;
  }
};

/// Normalized mean inflow over `days` days expressed in MWh.
inline double inflow_energy(double inflow_norm, int days, double energy_per_inflow) {
  return inflow_norm * days * energy_per_inflow;
}

/// Cost of adjusting the generation schedule by fraction A.
double stage1_cost(double A, const OperatingEnvelope& env, const PriceConfig& prices);

/// Cost of the end-of-period deviation D = inflow - (1 + A) * clim_generation.
/// Positive deviations above the free band are sold off-peak; deviations
/// beyond full capacity spill at the peak price. Negative deviations beyond
/// their band cost half the differential.
double stage2_cost(double A, double inflow_energy, const OperatingEnvelope& env, const PriceConfig& prices);

/// A finite distribution over inflow energy (MWh); weights sum to 1.
struct EnergyForecast {
  std::vector<double> energy;
  std::vector<double> weight;

  static EnergyForecast point(double energy);
  /// Point mass at the ZAGA atom plus `nodes` Gauss-Legendre nodes over the
  /// gamma part's probability scale. `energy_scale` converts user units.
  static EnergyForecast from_zaga(const ZagaDistribution& dist, double energy_scale, int nodes = 256);
  void validate() const;
};

double expected_stage2(double A, const EnergyForecast& forecast, const OperatingEnvelope& env,
                       const PriceConfig& prices);

enum class ForecastType { Climatological, Deterministic, Probabilistic };
const char* to_string(ForecastType t);
inline constexpr std::array<ForecastType, 3> kForecastTypes = {
    ForecastType::Climatological, ForecastType::Deterministic, ForecastType::Probabilistic};

struct AdjustmentDecision {
  double A = 0.0;
  double expected_cost = 0.0;
  ForecastType forecast_type = ForecastType::Probabilistic;
};

/// Exact minimizer of stage1 + expected stage2 over [-1, capacity - 1].
/// The objective is piecewise linear, so its minimum sits on a breakpoint;
/// all breakpoints are swept in one pass. Among minimizers the smallest |A|
/// wins.
AdjustmentDecision optimal_adjustment(const EnergyForecast& forecast, const OperatingEnvelope& env,
                                      const PriceConfig& prices,
                                      ForecastType type = ForecastType::Probabilistic);

struct CostBreakdown {
  double stage1 = 0.0;
  double stage2 = 0.0;
  double total = 0.0;
};

CostBreakdown realized_cost(const AdjustmentDecision& decision, double observed_energy, const OperatingEnvelope& env,
                            const PriceConfig& prices);

/// (sum G * peak - sum C) / sum G over the cases.
double water_value(std::span<const double> total_costs, std::span<const double> clim_generation, double peak_price);

/// One forecast period with all three forecast types.
struct CostCase {
  Date issue_date;
  std::string horizon;
  double clim_generation = 0.0;  // MWh
  double observed_energy = 0.0;  // MWh
  std::array<EnergyForecast, 3> forecasts;  // indexed by ForecastType
};

struct CaseDecision {
  Date issue_date;
  std::string horizon;
  ForecastType type = ForecastType::Climatological;
  double A = 0.0;
  CostBreakdown cost;
};

/// Decides and settles every case for every forecast type; output is
/// case-major, type-minor.
std::vector<CaseDecision> evaluate_cases(std::span<const CostCase> cases, const OperatingEnvelope& env,
                                         const PriceConfig& prices, int threads = 1);

struct ValueRow {
  ForecastType type = ForecastType::Climatological;
  std::string horizon;
  double differential = 0.0;
  double water_value = 0.0;
  double se = 0.0;
  double gain = 0.0;     // water value minus climatological, same resamples
  double gain_se = 0.0;
  std::size_t n = 0;
};

struct SweepOptions {
  std::vector<double> differentials = default_differentials();
  double peak_price = 50.0;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  int threads = 1;

  static std::vector<double> default_differentials();  // 5, 10, ..., 100
};

/// Water value and bootstrap SE per (type, differential) for one horizon's
/// cases. Every type is resampled with the same case indices.
std::vector<ValueRow> price_sweep(std::span<const CostCase> cases, const OperatingEnvelope& env,
                                  const SweepOptions& options);

/// Gauss-Legendre nodes and weights on (0, 1).
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace s2sflow
