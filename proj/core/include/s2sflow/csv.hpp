#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s2sflow::csv {

/// A header-addressed CSV table. Every row remembers its 1-based source
/// line so that parse failures can be reported as `file:line: message`.
class Table {
public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::istream& in, std::string source_name);

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t rows() const { return cells_.size(); }
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
  [[nodiscard]] std::size_t require_column(std::string_view name) const;
  [[nodiscard]] bool has_column(std::string_view name) const { return column(name).has_value(); }

  [[nodiscard]] const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
  [[nodiscard]] long integer(std::size_t row, std::size_t col) const;
  [[nodiscard]] std::size_t line(std::size_t row) const { return lines_[row]; }
  [[nodiscard]] const std::string& source() const { return source_; }

  /// Throws InputError prefixed with `source:line:`.
  [[noreturn]] void fail(std::size_t row, std::string_view message) const;

private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
  std::vector<std::size_t> lines_;
};

/// Shortest round-trippable text for a double; `NA` for NaN.
std::string format_number(double v);

void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace s2sflow::csv
