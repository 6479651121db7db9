#include "s2sflow/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"

namespace s2sflow::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto field = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Table Table::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError(fmt::format("cannot open '{}'", path.string()));
  }
  return parse(in, path.string());
}

Table Table::parse(std::istream& in, std::string source_name) {
  Table t;
  t.source_ = std::move(source_name);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = split(body);
    if (t.header_.empty()) {
      t.header_ = std::move(fields);
      continue;
    }
    if (fields.size() != t.header_.size()) {
      throw InputError(fmt::format("{}:{}: expected {} fields, found {}", t.source_, lineno, t.header_.size(),
                                   fields.size()));
    }
    t.cells_.push_back(std::move(fields));
    t.lines_.push_back(lineno);
  }
  if (t.header_.empty()) {
    throw InputError(fmt::format("{}: empty file (no header row)", t.source_));
  }
  return t;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw InputError(fmt::format("{}:1: missing required column '{}'", source_, name));
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& s = cells_[row][col];
  if (s == "NA" || s == "nan" || s == "NaN" || s.empty()) return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(row, fmt::format("column '{}': '{}' is not a number", header_[col], s));
  }
  return v;
}

long Table::integer(std::size_t row, std::size_t col) const {
  const std::string& s = cells_[row][col];
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(row, fmt::format("column '{}': '{}' is not an integer", header_[col], s));
  }
  return v;
}

void Table::fail(std::size_t row, std::string_view message) const {
  throw InputError(fmt::format("{}:{}: {}", source_, lines_[row], message));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  return fmt::format("{}", v);
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError(fmt::format("cannot write '{}'", path.string()));
  }
  out << contents;
}

}  // namespace s2sflow::csv
