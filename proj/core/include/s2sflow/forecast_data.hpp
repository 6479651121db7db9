#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "s2sflow/dates.hpp"
#include "s2sflow/telemetry.hpp"

namespace s2sflow {

/// One forecast issue: K member trajectories of daily precipitation rate
/// (mm/day). members[k][d - 1] is lead day d, i.e. the date issue_date + d.
struct EnsemblePrecipForecast {
  Date issue_date;
  std::vector<std::vector<double>> members;

  [[nodiscard]] std::size_t member_count() const { return members.size(); }
  [[nodiscard]] std::size_t lead_days() const { return members.empty() ? 0 : members.front().size(); }
  /// K >= 2, equal member lengths, all rates finite and >= 0.
  void validate() const;
};

struct HorizonSpec {
  std::string name;
  int start_day = 1;  // 1-based, inclusive
  int end_day = 1;    // inclusive

  [[nodiscard]] int length() const { return end_day - start_day + 1; }
  bool operator==(const HorizonSpec&) const = default;
};

/// The eleven inflow-forecast horizons: Forecast Weeks 1-6 and the
/// 2- to 6-week extended averages starting at day 1.
const std::vector<HorizonSpec>& canonical_horizons();
/// Looks a horizon up by name; throws InputError if unknown.
const HorizonSpec& horizon_by_name(const std::string& name);
inline constexpr int kMaxHorizonDay = 42;

/// A gap-free-indexed daily series; missing days hold NaN.
struct DailySeries {
  Date start;
  std::vector<double> values;

  [[nodiscard]] double value_on(Date d) const;
  [[nodiscard]] Date end() const { return start + std::chrono::days{static_cast<long>(values.size())}; }
};

/// Views a daily InflowSeries as a DailySeries; throws if not daily.
DailySeries to_daily(const telemetry::InflowSeries& inflow);

/// Member-wise mean precipitation over the horizon's lead days.
std::vector<double> horizon_average(const EnsemblePrecipForecast& f, const HorizonSpec& h);

/// Mean of the series over dates [issue + start_day, issue + end_day];
/// NaN unless every day in the window is present.
double observed_horizon_mean(const DailySeries& series, Date issue_date, const HorizonSpec& h);

struct MonthlyClimatology {
  HorizonSpec horizon;
  unsigned target_month = 1;
  int forecast_year = 0;
  std::vector<double> values;
  std::vector<Date> issue_dates;  // the issue each value was computed for
  std::vector<int> years;         // distinct contributing years, ascending
};

/// Horizon means for every candidate issue date in `target_month`, from
/// every year except `forecast_year` and `forecast_year + 1`. Issues whose
/// window is not fully observed are dropped. Throws InputError when fewer
/// than `min_years` distinct years remain.
MonthlyClimatology build_climatology(const DailySeries& series, const HorizonSpec& h, unsigned target_month,
                                     int forecast_year, std::span<const Date> candidate_issue_dates,
                                     std::size_t min_years = 3);

/// Mondays and Thursdays in [first, last].
std::vector<Date> twice_weekly_issue_dates(Date first, Date last);

}  // namespace s2sflow
