#pragma once

#include <vector>

#include "s2sflow/dates.hpp"

namespace s2sflow {

/// Uniform cyclic cubic B-spline basis over the day of the year.
///
/// J basis functions with evenly spaced knots at k * period / J. The basis
/// is a partition of unity and is C2 across the wrap. Because the
/// functions sum to one, a spline sum_j c_j B_j is confounded with an
/// intercept; models use the J - 1 contrasts B_j - B_{J-1}, i.e.
/// coefficients constrained to sum to zero.
class SeasonalSplineBasis {
public:
  explicit SeasonalSplineBasis(int knots = 6, double period_days = 365.25);

  [[nodiscard]] int size() const { return knots_; }
  [[nodiscard]] int free_size() const { return knots_ - 1; }
  [[nodiscard]] double period() const { return period_; }
  [[nodiscard]] std::vector<double> knot_positions() const;

  /// Basis values (derivative `order` 0, 1 or 2) at day offset t (days
  /// since 1 January, any real; reduced modulo the period).
  [[nodiscard]] std::vector<double> evaluate(double t, int order = 0) const;
  /// Sum-to-zero contrasts: B_j - B_{J-1} for j < J - 1.
  [[nodiscard]] std::vector<double> contrasts(double t) const;

  /// Expands J - 1 free coefficients to the full sum-to-zero J vector.
  [[nodiscard]] std::vector<double> expand(const std::vector<double>& free) const;

  static double day_offset(Date d) { return static_cast<double>(day_of_year(d) - 1); }

private:
  int knots_;
  double period_;
};

}  // namespace s2sflow
