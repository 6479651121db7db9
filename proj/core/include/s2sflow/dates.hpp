#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace s2sflow {

using Date = std::chrono::sys_days;
using Instant = std::chrono::sys_seconds;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Parses `YYYY-MM-DD`. Throws InputError on malformed text or invalid dates.
Date parse_date(std::string_view text);
/// Parses ISO-8601 UTC `YYYY-MM-DDTHH:MM[:SS][Z]` (a space separator is also accepted).
Instant parse_instant(std::string_view text);

std::string format_date(Date d);
std::string format_instant(Instant t);

int year_of(Date d);
unsigned month_of(Date d);       // 1..12
unsigned day_of_year(Date d);    // 1..366
Date make_date(int year, unsigned month, unsigned day);
Date date_of(Instant t);

}  // namespace s2sflow
