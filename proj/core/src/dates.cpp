#include "s2sflow/dates.hpp"

#include <charconv>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"

namespace s2sflow {
namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > text.size()) {
    throw InputError(fmt::format("malformed date/time '{}'", whole));
  }
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw InputError(fmt::format("malformed date/time '{}'", whole));
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw InputError(fmt::format("malformed date '{}' (expected YYYY-MM-DD)", text));
  }
  const int y = parse_int(text, 0, 4, text);
  const int m = parse_int(text, 5, 2, text);
  const int d = parse_int(text, 8, 2, text);
  if (text.size() != 10) {
    throw InputError(fmt::format("malformed date '{}' (trailing characters)", text));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw InputError(fmt::format("invalid calendar date '{}'", text));
  }
  return Date{ymd};
}

Instant parse_instant(std::string_view text) {
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw InputError(fmt::format("malformed timestamp '{}' (expected YYYY-MM-DDTHH:MM[:SS]Z)", text));
  }
  const Date day = parse_date(text.substr(0, 10));
  const int hh = parse_int(text, 11, 2, text);
  const int mm = parse_int(text, 14, 2, text);
  int ss = 0;
  std::size_t end = 16;
  if (text.size() >= 19 && text[16] == ':') {
    ss = parse_int(text, 17, 2, text);
    end = 19;
  }
  if (end < text.size() && text[end] == 'Z') {
    ++end;
  }
  if (end != text.size() || hh > 23 || mm > 59 || ss > 60) {
    throw InputError(fmt::format("malformed timestamp '{}'", text));
  }
  return Instant{day} + std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

std::string format_instant(Instant t) {
  const Date d = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::hh_mm_ss hms{t - Instant{d}};
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(d), hms.hours().count(), hms.minutes().count(),
                     hms.seconds().count());
}

int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

unsigned month_of(Date d) { return static_cast<unsigned>(std::chrono::year_month_day{d}.month()); }

unsigned day_of_year(Date d) {
  const std::chrono::year_month_day ymd{d};
  const Date jan1{ymd.year() / std::chrono::January / 1};
  return static_cast<unsigned>((d - jan1).count()) + 1;
}

Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    throw InputError(fmt::format("invalid calendar date {}-{}-{}", year, month, day));
  }
  return Date{ymd};
}

Date date_of(Instant t) { return std::chrono::floor<std::chrono::days>(t); }

}  // namespace s2sflow
