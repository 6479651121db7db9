#include "s2sflow/seasonal_spline.hpp"

#include <cmath>

#include <fmt/format.h>

#include "s2sflow/errors.hpp"

namespace s2sflow {
namespace {

// Centred cardinal cubic B-spline on [-2, 2] and its first two derivatives.
double cardinal_cubic(double x, int order) {
  const double ax = std::abs(x);
  const double sgn = x < 0.0 ? -1.0 : 1.0;
  if (ax >= 2.0) return 0.0;
  if (ax <= 1.0) {
    switch (order) {
      case 0: return 2.0 / 3.0 - ax * ax + 0.5 * ax * ax * ax;
      case 1: return sgn * (-2.0 * ax + 1.5 * ax * ax);
      default: return -2.0 + 3.0 * ax;
    }
  }
  const double r = 2.0 - ax;
  switch (order) {
    case 0: return r * r * r / 6.0;
    case 1: return -sgn * 0.5 * r * r;
    default: return r;
  }
}

}  // namespace

SeasonalSplineBasis::SeasonalSplineBasis(int knots, double period_days) : knots_(knots), period_(period_days) {
  if (knots_ < 4) throw InputError(fmt::format("seasonal spline: {} knots, need at least 4", knots_));
  if (!(period_ > 0.0)) throw InputError("seasonal spline: period must be positive");
}

std::vector<double> SeasonalSplineBasis::knot_positions() const {
  std::vector<double> out(static_cast<std::size_t>(knots_));
  for (int j = 0; j < knots_; ++j) out[static_cast<std::size_t>(j)] = period_ * j / knots_;
  return out;
}

std::vector<double> SeasonalSplineBasis::evaluate(double t, int order) const {
  const double h = period_ / knots_;
  const double tt = std::fmod(std::fmod(t, period_) + period_, period_);
  const double scale = order == 0 ? 1.0 : (order == 1 ? 1.0 / h : 1.0 / (h * h));
  std::vector<double> out(static_cast<std::size_t>(knots_));
  for (int j = 0; j < knots_; ++j) {
    double d = tt - period_ * j / knots_;
    // Wrap to the nearest image of the knot.
    if (d > 0.5 * period_) d -= period_;
    if (d < -0.5 * period_) d += period_;
    out[static_cast<std::size_t>(j)] = scale * cardinal_cubic(d / h, order);
  }
  return out;
}

std::vector<double> SeasonalSplineBasis::contrasts(double t) const {
  const auto b = evaluate(t);
  std::vector<double> out(static_cast<std::size_t>(knots_ - 1));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = b[j] - b.back();
  return out;
}

std::vector<double> SeasonalSplineBasis::expand(const std::vector<double>& free) const {
  std::vector<double> full(free);
  double s = 0.0;
  for (double c : free) s += c;
  full.push_back(-s);
  return full;
}

}  // namespace s2sflow
