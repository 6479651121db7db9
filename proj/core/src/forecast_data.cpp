#include "s2sflow/forecast_data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"

namespace s2sflow {

void EnsemblePrecipForecast::validate() const {
  if (members.size() < 2) {
    throw InputError(fmt::format("forecast {}: {} members, need at least 2", format_date(issue_date), members.size()));
  }
  const std::size_t len = members.front().size();
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].size() != len) {
      throw InputError(fmt::format("forecast {}: member {} has {} lead days, member 0 has {}",
                                   format_date(issue_date), k, members[k].size(), len));
    }
    for (double v : members[k]) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InputError(fmt::format("forecast {}: member {} has invalid precipitation rate {}",
                                     format_date(issue_date), k, v));
      }
    }
  }
}

const std::vector<HorizonSpec>& canonical_horizons() {
  static const std::vector<HorizonSpec> horizons{
      {"Week 1", 1, 7},   {"Week 2", 8, 14},  {"Week 3", 15, 21},  {"Week 4", 22, 28},
      {"Week 5", 29, 35}, {"Week 6", 36, 42}, {"2 Weeks", 1, 14},  {"3 Weeks", 1, 21},
      {"4 Weeks", 1, 28}, {"5 Weeks", 1, 35}, {"6 Weeks", 1, 42},
  };
  return horizons;
}

const HorizonSpec& horizon_by_name(const std::string& name) {
  for (const auto& h : canonical_horizons()) {
    if (h.name == name) return h;
  }
  throw InputError(fmt::format("unknown forecast horizon '{}'", name));
}

double DailySeries::value_on(Date d) const {
  const long i = (d - start).count();
  if (i < 0 || i >= static_cast<long>(values.size())) return kMissing;
  return values[static_cast<std::size_t>(i)];
}

DailySeries to_daily(const telemetry::InflowSeries& inflow) {
  if (inflow.step_days != 1) {
    throw InputError(fmt::format("expected a daily inflow series, got a {}-day step", inflow.step_days));
  }
  return DailySeries{inflow.start, inflow.values};
}

std::vector<double> horizon_average(const EnsemblePrecipForecast& f, const HorizonSpec& h) {
  if (h.start_day < 1 || h.end_day < h.start_day) {
    throw InputError(fmt::format("horizon '{}' has an invalid day range {}..{}", h.name, h.start_day, h.end_day));
  }
  if (static_cast<std::size_t>(h.end_day) > f.lead_days()) {
    throw InputError(fmt::format("forecast {}: horizon '{}' needs lead day {}, forecast has {}",
                                 format_date(f.issue_date), h.name, h.end_day, f.lead_days()));
  }
  std::vector<double> out;
  out.reserve(f.member_count());
  for (const auto& m : f.members) {
    double s = 0.0;
    for (int d = h.start_day; d <= h.end_day; ++d) {
      const double v = m[static_cast<std::size_t>(d - 1)];
      if (is_missing(v)) {
        throw InputError(fmt::format("forecast {}: missing lead day {}", format_date(f.issue_date), d));
      }
      s += v;
    }
    out.push_back(s / h.length());
  }
  return out;
}

double observed_horizon_mean(const DailySeries& series, Date issue_date, const HorizonSpec& h) {
  double s = 0.0;
  for (int d = h.start_day; d <= h.end_day; ++d) {
    const double v = series.value_on(issue_date + std::chrono::days{d});
    if (is_missing(v)) return kMissing;
    s += v;
  }
  return s / h.length();
}

MonthlyClimatology build_climatology(const DailySeries& series, const HorizonSpec& h, unsigned target_month,
                                     int forecast_year, std::span<const Date> candidate_issue_dates,
                                     std::size_t min_years) {
  MonthlyClimatology c;
  c.horizon = h;
  c.target_month = target_month;
  c.forecast_year = forecast_year;
  std::set<int> years;
  for (Date issue : candidate_issue_dates) {
    if (month_of(issue) != target_month) continue;
    const int y = year_of(issue);
    if (y == forecast_year || y == forecast_year + 1) continue;
    const double v = observed_horizon_mean(series, issue, h);
    if (is_missing(v)) continue;
    c.values.push_back(v);
    c.issue_dates.push_back(issue);
    years.insert(y);
  }
  c.years.assign(years.begin(), years.end());
  if (c.years.size() < min_years) {
    throw InputError(fmt::format("climatology for month {} of {} ({}): only {} admissible years, need {}",
                                 target_month, forecast_year, h.name, c.years.size(), min_years));
  }
  return c;
}

std::vector<Date> twice_weekly_issue_dates(Date first, Date last) {
  std::vector<Date> out;
  for (Date d = first; d <= last; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd == std::chrono::Monday || wd == std::chrono::Thursday) out.push_back(d);
  }
  return out;
}

}  // namespace s2sflow
