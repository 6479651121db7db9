#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2sflow/dates.hpp"

namespace s2sflow::telemetry {

inline constexpr double kWaterDensity = 1000.0;  // kg/m^3
inline constexpr double kGravity = 9.81;         // m/s^2

struct TelemetryRecord {
  Instant timestamp;
  double water_level_m = 0.0;
  double power_w = 0.0;
};

struct PhysicalBounds {
  double level_min_m = 0.0;
  double level_max_m = 0.0;
  double power_max_w = 0.0;  // plant capacity; the lower bound is always 0
};

/// Largest admissible |d value / dt| per field, in units per hour.
struct StepLimits {
  double level_m_per_hour = 0.0;
  double power_w_per_hour = 0.0;
};

enum class RemovalReason { Bound, Step };
const char* to_string(RemovalReason r);

struct Removal {
  std::size_t index = 0;  // position in the input sequence
  RemovalReason reason = RemovalReason::Bound;
  std::string field;      // "water_level" or "power"
};

struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::vector<Removal> removed;
  bool excessive_removal = false;  // more than half of the input removed

  [[nodiscard]] double removed_fraction() const {
    return input_count == 0 ? 0.0 : static_cast<double>(removed.size()) / static_cast<double>(input_count);
  }
};

struct CleanedTelemetry {
  std::vector<TelemetryRecord> records;
  CleaningReport report;
};

/// Removes records outside the physical bounds, then removes records whose
/// rate of change relative to the last accepted record exceeds the step
/// limits. Comparing against the last *accepted* record makes an isolated
/// spike cost exactly one record and makes the operation idempotent.
/// Throws InputError on empty or non-increasing input.
CleanedTelemetry clean_telemetry(std::span<const TelemetryRecord> records, const PhysicalBounds& bounds,
                                 const StepLimits& max_step);

/// Rectangular table over (power, water level) with bilinear interpolation.
/// Lookups outside the axes throw DomainError; nothing is extrapolated.
class Grid2D {
public:
  Grid2D() = default;
  /// values[i * levels.size() + j] is the value at (powers[i], levels[j]).
  Grid2D(std::vector<double> powers_w, std::vector<double> levels_m, std::vector<double> values);

  [[nodiscard]] double at(double power_w, double level_m) const;
  [[nodiscard]] bool contains(double power_w, double level_m) const;
  [[nodiscard]] const std::vector<double>& powers() const { return powers_; }
  [[nodiscard]] const std::vector<double>& levels() const { return levels_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

private:
  std::vector<double> powers_;
  std::vector<double> levels_;
  std::vector<double> values_;
};

/// Piecewise-linear, strictly increasing map water level -> stored volume.
class StorageCurve {
public:
  StorageCurve() = default;
  StorageCurve(std::vector<double> levels_m, std::vector<double> volumes_m3);

  [[nodiscard]] double volume_at(double level_m) const;
  [[nodiscard]] double level_at(double volume_m3) const;
  [[nodiscard]] bool contains_level(double level_m) const;
  [[nodiscard]] const std::vector<double>& levels() const { return levels_; }
  [[nodiscard]] const std::vector<double>& volumes() const { return volumes_; }

private:
  std::vector<double> levels_;
  std::vector<double> volumes_;
};

struct PlantCurves {
  Grid2D efficiency;  // (0, 1]
  Grid2D net_head;    // metres, > 0
  StorageCurve storage;

  /// Checks the value-range invariants of the tables; throws InputError.
  void validate() const;
};

struct CompensationPeriod {
  Date start;
  Date end;  // inclusive
  double flow_m3s = 0.0;
};

class CompensationSchedule {
public:
  CompensationSchedule() = default;
  /// Throws InputError on negative rates or overlapping date ranges.
  explicit CompensationSchedule(std::vector<CompensationPeriod> periods);

  [[nodiscard]] std::optional<double> flow_on(Date d) const;
  [[nodiscard]] const std::vector<CompensationPeriod>& periods() const { return periods_; }

private:
  std::vector<CompensationPeriod> periods_;  // sorted by start
};

/// discharge = power / (efficiency * density * gravity * head), m^3/s.
double compute_discharge(double power_w, double efficiency, double head_m);

struct SkippedRecord {
  std::size_t index = 0;  // position in the cleaned sequence
  std::string reason;
};

struct HourlyInflow {
  std::vector<Instant> times;
  std::vector<double> inflow_m3s;
  std::vector<SkippedRecord> skipped;
};

/// net inflow = discharge + dV/dt + compensation. dV/dt uses central
/// differences on storage-mapped volumes (one-sided at the ends).
HourlyInflow reconstruct_net_inflow(std::span<const TelemetryRecord> cleaned, const PlantCurves& curves,
                                    const CompensationSchedule& compensation);

enum class Window { Daily, Weekly };

/// Regular daily or weekly series of normalized net inflow. Missing
/// windows hold NaN.
struct InflowSeries {
  Date start;
  int step_days = 1;
  std::vector<double> values;
  double normalization_constant = 1.0;  // m^3/s

  [[nodiscard]] Date date_at(std::size_t i) const { return start + std::chrono::days{step_days * static_cast<long>(i)}; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Window means of the hourly series (windows with less than `min_coverage`
/// of their hours present are missing), normalized by the record-wide mean
/// of the window means.
InflowSeries aggregate_and_normalize(const HourlyInflow& hourly, Window window, double min_coverage = 0.8);

struct CrossCorrelation {
  std::vector<int> lags;
  std::vector<double> correlation;  // NaN where undefined
  std::optional<int> best_lag;
  double best = kMissing;
};

/// Pearson correlation of a(t + lag) with b(t) for each lag in
/// [min_lag, max_lag]; a negative lag pairs past `a` with present `b`.
/// NaN samples are skipped. Lags with fewer than `min_overlap` pairs or
/// zero variance are reported as missing. Ties in the peak go to the lag
/// closest to zero, then to the negative lag.
CrossCorrelation cross_correlation(std::span<const double> a, std::span<const double> b, int min_lag, int max_lag,
                                   std::size_t min_overlap = 30);

}  // namespace s2sflow::telemetry
