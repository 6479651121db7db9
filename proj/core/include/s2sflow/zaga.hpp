#pragma once

namespace s2sflow {

class Rng;

/// Zero-adjusted gamma: probability mass `nu` at zero mixed with a gamma
/// component of mean `mu` and coefficient of variation `sigma`
/// (shape 1/sigma^2, scale sigma^2 * mu).
///
/// The distribution lives in shifted space (y >= 0). Forecast values in the
/// original inflow units are y - offset; the `user_*` members work in those
/// units.
struct ZagaDistribution {
  double mu = 1.0;
  double sigma = 1.0;
  double nu = 0.0;
  double offset = 0.0;

  /// Throws DomainError unless mu > 0, sigma > 0, 0 <= nu < 1, offset finite.
  void validate() const;

  [[nodiscard]] double shape() const { return 1.0 / (sigma * sigma); }
  [[nodiscard]] double scale() const { return sigma * sigma * mu; }

  /// Density of the continuous part, (1 - nu) * gamma pdf, for y > 0.
  [[nodiscard]] double pdf(double y) const;
  [[nodiscard]] double cdf(double y) const;
  /// 0 for p <= nu, otherwise the gamma quantile at (p - nu) / (1 - nu).
  [[nodiscard]] double quantile(double p) const;

  [[nodiscard]] double gamma_cdf(double y) const;
  [[nodiscard]] double gamma_quantile(double u) const;

  [[nodiscard]] double user_cdf(double x) const { return cdf(x + offset); }
  [[nodiscard]] double user_quantile(double p) const { return quantile(p) - offset; }

  /// Mean in user units.
  [[nodiscard]] double user_mean() const { return (1.0 - nu) * mu - offset; }

  /// Inverse-transform draw in user units.
  double sample_user(Rng& rng) const;
};

/// Regularized lower incomplete gamma P(a, x) and its inverse.
double gamma_p(double a, double x);
/// Upper complement Q(a, x) = 1 - P(a, x), accurate in the tail.
double gamma_q(double a, double x);
double gamma_p_inv(double a, double p);
double log_gamma(double a);
double digamma(double a);

}  // namespace s2sflow
