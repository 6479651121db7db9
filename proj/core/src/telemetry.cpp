#include "s2sflow/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"

namespace s2sflow::telemetry {
namespace {

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

// Index i such that axis[i] <= x <= axis[i+1] and the interpolation weight.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  if (axis.size() == 1) return {0, 0.0};
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
  const std::size_t lo = hi - 1;
  return {lo, (x - axis[lo]) / (axis[hi] - axis[lo])};
}

double hours_between(Instant a, Instant b) {
  return std::chrono::duration<double, std::ratio<3600>>(b - a).count();
}

}  // namespace

const char* to_string(RemovalReason r) {
  switch (r) {
    case RemovalReason::Bound: return "bound";
    case RemovalReason::Step: return "step";
  }
  return "unknown";
}

CleanedTelemetry clean_telemetry(std::span<const TelemetryRecord> records, const PhysicalBounds& bounds,
                                 const StepLimits& max_step) {
  if (records.empty()) {
    throw InputError("clean_telemetry: empty telemetry record sequence");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].timestamp > records[i - 1].timestamp)) {
      throw InputError(fmt::format("clean_telemetry: timestamps not strictly increasing at record {} ({})", i,
                                   format_instant(records[i].timestamp)));
    }
  }

  CleanedTelemetry out;
  out.report.input_count = records.size();
  const TelemetryRecord* last = nullptr;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!(r.water_level_m >= bounds.level_min_m && r.water_level_m <= bounds.level_max_m)) {
      out.report.removed.push_back({i, RemovalReason::Bound, "water_level"});
      continue;
    }
    if (!(r.power_w >= 0.0 && r.power_w <= bounds.power_max_w)) {
      out.report.removed.push_back({i, RemovalReason::Bound, "power"});
      continue;
    }
    if (last != nullptr) {
      const double dt = hours_between(last->timestamp, r.timestamp);
      if (std::abs(r.water_level_m - last->water_level_m) > max_step.level_m_per_hour * dt) {
        out.report.removed.push_back({i, RemovalReason::Step, "water_level"});
        continue;
      }
      if (std::abs(r.power_w - last->power_w) > max_step.power_w_per_hour * dt) {
        out.report.removed.push_back({i, RemovalReason::Step, "power"});
        continue;
      }
    }
    out.records.push_back(r);
    last = &records[i];
  }
  out.report.kept_count = out.records.size();
  out.report.excessive_removal = 2 * out.report.removed.size() > records.size();
  return out;
}

Grid2D::Grid2D(std::vector<double> powers_w, std::vector<double> levels_m, std::vector<double> values)
    : powers_(std::move(powers_w)), levels_(std::move(levels_m)), values_(std::move(values)) {
  if (powers_.empty() || levels_.empty()) {
    throw InputError("curve table: empty axis");
  }
  if (values_.size() != powers_.size() * levels_.size()) {
    throw InputError(fmt::format("curve table: {} values for a {}x{} grid", values_.size(), powers_.size(),
                                 levels_.size()));
  }
  if (!strictly_increasing(powers_) || !strictly_increasing(levels_)) {
    throw InputError("curve table: axes must be strictly increasing");
  }
}

bool Grid2D::contains(double power_w, double level_m) const {
  return !powers_.empty() && power_w >= powers_.front() && power_w <= powers_.back() &&
         level_m >= levels_.front() && level_m <= levels_.back();
}

double Grid2D::at(double power_w, double level_m) const {
  if (!contains(power_w, level_m)) {
    throw DomainError(fmt::format("curve lookup outside table: power {} W, level {} m", power_w, level_m));
  }
  const auto [i, u] = locate(powers_, power_w);
  const auto [j, v] = locate(levels_, level_m);
  const std::size_t n = levels_.size();
  const std::size_t i1 = std::min(i + 1, powers_.size() - 1);
  const std::size_t j1 = std::min(j + 1, n - 1);
  const double f00 = values_[i * n + j];
  const double f01 = values_[i * n + j1];
  const double f10 = values_[i1 * n + j];
  const double f11 = values_[i1 * n + j1];
  return (1 - u) * ((1 - v) * f00 + v * f01) + u * ((1 - v) * f10 + v * f11);
}

StorageCurve::StorageCurve(std::vector<double> levels_m, std::vector<double> volumes_m3)
    : levels_(std::move(levels_m)), volumes_(std::move(volumes_m3)) {
  if (levels_.size() < 2 || levels_.size() != volumes_.size()) {
    throw InputError("storage curve: need at least two (level, volume) points of equal count");
  }
  if (!strictly_increasing(levels_) || !strictly_increasing(volumes_)) {
    throw InputError("storage curve: levels and volumes must be strictly increasing");
  }
}

bool StorageCurve::contains_level(double level_m) const {
  return !levels_.empty() && level_m >= levels_.front() && level_m <= levels_.back();
}

double StorageCurve::volume_at(double level_m) const {
  if (!contains_level(level_m)) {
    throw DomainError(fmt::format("storage curve lookup outside table: level {} m", level_m));
  }
  const auto [i, w] = locate(levels_, level_m);
  return volumes_[i] + w * (volumes_[i + 1] - volumes_[i]);
}

double StorageCurve::level_at(double volume_m3) const {
  if (volumes_.empty() || volume_m3 < volumes_.front() || volume_m3 > volumes_.back()) {
    throw DomainError(fmt::format("storage curve inverse outside table: volume {} m3", volume_m3));
  }
  const auto [i, w] = locate(volumes_, volume_m3);
  return levels_[i] + w * (levels_[i + 1] - levels_[i]);
}

void PlantCurves::validate() const {
  for (double e : efficiency.values()) {
    if (!(e > 0.0 && e <= 1.0)) {
      throw InputError(fmt::format("efficiency table: value {} outside (0, 1]", e));
    }
  }
  for (double h : net_head.values()) {
    if (!(h > 0.0)) {
      throw InputError(fmt::format("net head table: non-positive head {}", h));
    }
  }
  if (storage.levels().empty()) {
    throw InputError("storage curve missing");
  }
}

CompensationSchedule::CompensationSchedule(std::vector<CompensationPeriod> periods) : periods_(std::move(periods)) {
  std::sort(periods_.begin(), periods_.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < periods_.size(); ++i) {
    const auto& p = periods_[i];
    if (p.end < p.start) {
      throw InputError(fmt::format("compensation period {}..{} ends before it starts", format_date(p.start),
                                   format_date(p.end)));
    }
    if (!(p.flow_m3s >= 0.0)) {
      throw InputError(fmt::format("compensation flow {} m3/s is negative", p.flow_m3s));
    }
    if (i > 0 && periods_[i - 1].end >= p.start) {
      throw InputError(fmt::format("compensation periods overlap at {}", format_date(p.start)));
    }
  }
}

std::optional<double> CompensationSchedule::flow_on(Date d) const {
  auto it = std::upper_bound(periods_.begin(), periods_.end(), d,
                             [](Date x, const CompensationPeriod& p) { return x < p.start; });
  if (it == periods_.begin()) return std::nullopt;
  --it;
  if (d <= it->end) return it->flow_m3s;
  return std::nullopt;
}

double compute_discharge(double power_w, double efficiency, double head_m) {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw DomainError(fmt::format("turbine efficiency {} outside (0, 1]", efficiency));
  }
  if (!(head_m > 0.0)) {
    throw DomainError(fmt::format("net head {} m is not positive", head_m));
  }
  if (!(power_w >= 0.0)) {
    throw DomainError(fmt::format("power {} W is negative", power_w));
  }
  return power_w / (efficiency * kWaterDensity * kGravity * head_m);
}

HourlyInflow reconstruct_net_inflow(std::span<const TelemetryRecord> cleaned, const PlantCurves& curves,
                                    const CompensationSchedule& compensation) {
  HourlyInflow out;
  const std::size_t n = cleaned.size();

  // Volumes for every record whose level maps through the storage curve;
  // derivative stencils only use those.
  std::vector<double> volume(n, kMissing);
  std::vector<std::size_t> usable;
  usable.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (curves.storage.contains_level(cleaned[i].water_level_m)) {
      volume[i] = curves.storage.volume_at(cleaned[i].water_level_m);
      usable.push_back(i);
    } else {
      out.skipped.push_back({i, "water level outside storage curve"});
    }
  }

  for (std::size_t k = 0; k < usable.size(); ++k) {
    const std::size_t i = usable[k];
    const auto& r = cleaned[i];
    if (usable.size() < 2) {
      out.skipped.push_back({i, "too few records for a volume derivative"});
      continue;
    }
    const std::size_t prev = k == 0 ? i : usable[k - 1];
    const std::size_t next = k + 1 == usable.size() ? i : usable[k + 1];
    const double dt_s = std::chrono::duration<double>(cleaned[next].timestamp - cleaned[prev].timestamp).count();
    const double dvdt = (volume[next] - volume[prev]) / dt_s;

    if (!curves.efficiency.contains(r.power_w, r.water_level_m) ||
        !curves.net_head.contains(r.power_w, r.water_level_m)) {
      out.skipped.push_back({i, "(power, level) outside efficiency/head curves"});
      continue;
    }
    const auto comp = compensation.flow_on(date_of(r.timestamp));
    if (!comp) {
      out.skipped.push_back({i, "no compensation flow scheduled for this date"});
      continue;
    }
    const double q = compute_discharge(r.power_w, curves.efficiency.at(r.power_w, r.water_level_m),
                                       curves.net_head.at(r.power_w, r.water_level_m));
    out.times.push_back(r.timestamp);
    out.inflow_m3s.push_back(q + dvdt + *comp);
  }
  std::sort(out.skipped.begin(), out.skipped.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

InflowSeries aggregate_and_normalize(const HourlyInflow& hourly, Window window, double min_coverage) {
  if (hourly.times.empty()) {
    throw InputError("aggregate_and_normalize: empty hourly inflow series");
  }
  const int step = window == Window::Daily ? 1 : 7;
  const double expected_hours = 24.0 * step;
  const Date first = date_of(hourly.times.front());
  const Date last = date_of(hourly.times.back());
  const auto n_windows = static_cast<std::size_t>((last - first).count() / step + 1);

  std::vector<double> sum(n_windows, 0.0);
  std::vector<std::size_t> count(n_windows, 0);
  for (std::size_t i = 0; i < hourly.times.size(); ++i) {
    const double v = hourly.inflow_m3s[i];
    if (is_missing(v)) continue;
    const auto w = static_cast<std::size_t>((date_of(hourly.times[i]) - first).count() / step);
    sum[w] += v;
    ++count[w];
  }

  InflowSeries s;
  s.start = first;
  s.step_days = step;
  s.values.assign(n_windows, kMissing);
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    if (static_cast<double>(count[w]) >= min_coverage * expected_hours) {
      s.values[w] = sum[w] / static_cast<double>(count[w]);
      total += s.values[w];
      ++present;
    }
  }
  if (present == 0) {
    throw InputError("aggregate_and_normalize: no window has sufficient coverage");
  }
  s.normalization_constant = total / static_cast<double>(present);
  if (s.normalization_constant == 0.0) {
    throw NumericalError("aggregate_and_normalize: record-wide mean inflow is zero; cannot normalize");
  }
  for (double& v : s.values) {
    if (!is_missing(v)) v /= s.normalization_constant;
  }
  return s;
}

CrossCorrelation cross_correlation(std::span<const double> a, std::span<const double> b, int min_lag, int max_lag,
                                   std::size_t min_overlap) {
  if (min_lag > max_lag) {
    throw InputError("cross_correlation: empty lag range");
  }
  CrossCorrelation out;
  const auto na = static_cast<long>(a.size());
  const auto nb = static_cast<long>(b.size());
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    out.lags.push_back(lag);
    // Two passes: means, then centred moments.
    double sa = 0.0, sb = 0.0;
    std::size_t n = 0;
    for (long t = 0; t < nb; ++t) {
      const long ta = t + lag;
      if (ta < 0 || ta >= na || is_missing(a[ta]) || is_missing(b[t])) continue;
      sa += a[ta];
      sb += b[t];
      ++n;
    }
    if (n < min_overlap) {
      out.correlation.push_back(kMissing);
      continue;
    }
    const double ma = sa / static_cast<double>(n);
    const double mb = sb / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (long t = 0; t < nb; ++t) {
      const long ta = t + lag;
      if (ta < 0 || ta >= na || is_missing(a[ta]) || is_missing(b[t])) continue;
      const double da = a[ta] - ma;
      const double db = b[t] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
      out.correlation.push_back(kMissing);
      continue;
    }
    out.correlation.push_back(sab / std::sqrt(saa * sbb));
  }

  for (std::size_t i = 0; i < out.lags.size(); ++i) {
    const double r = out.correlation[i];
    if (is_missing(r)) continue;
    const int lag = out.lags[i];
    bool better = !out.best_lag || r > out.best;
    if (out.best_lag && r == out.best) {
      const int cur = *out.best_lag;
      better = std::abs(lag) < std::abs(cur) || (std::abs(lag) == std::abs(cur) && lag < cur);
    }
    if (better) {
      out.best = r;
      out.best_lag = lag;
    }
  }
  return out;
}

}  // namespace s2sflow::telemetry
