#include "s2sflow/zaga.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "s2sflow/errors.hpp"
#include "s2sflow/random.hpp"

namespace s2sflow {

double gamma_p(double a, double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(a, x); }

double gamma_q(double a, double x) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(a, x); }

double gamma_p_inv(double a, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::gamma_p_inv(a, p);
}

double log_gamma(double a) { return boost::math::lgamma(a); }

double digamma(double a) { return boost::math::digamma(a); }

void ZagaDistribution::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError(fmt::format("ZAGA: mu = {} must be positive", mu));
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError(fmt::format("ZAGA: sigma = {} must be positive", sigma));
  }
  if (!(nu >= 0.0 && nu < 1.0)) throw DomainError(fmt::format("ZAGA: nu = {} must lie in [0, 1)", nu));
  if (!std::isfinite(offset)) throw DomainError("ZAGA: offset must be finite");
}

double ZagaDistribution::pdf(double y) const {
  if (y < 0.0) return 0.0;
  const double a = shape();
  const double s = scale();
  if (y == 0.0) {
    if (a < 1.0) return std::numeric_limits<double>::infinity();
    return a == 1.0 ? (1.0 - nu) / s : 0.0;
  }
  const double log_f = -a * std::log(s) + (a - 1.0) * std::log(y) - y / s - log_gamma(a);
  return (1.0 - nu) * std::exp(log_f);
}

double ZagaDistribution::gamma_cdf(double y) const { return gamma_p(shape(), y / scale()); }

double ZagaDistribution::gamma_quantile(double u) const { return gamma_p_inv(shape(), u) * scale(); }

double ZagaDistribution::cdf(double y) const {
  if (y < 0.0) return 0.0;
  return nu + (1.0 - nu) * gamma_cdf(y);
}

double ZagaDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("ZAGA quantile: p = {} outside (0, 1)", p));
  if (p <= nu) return 0.0;
  return gamma_quantile((p - nu) / (1.0 - nu));
}

double ZagaDistribution::sample_user(Rng& rng) const {
  const double u = rng.uniform();
  if (u <= nu) return -offset;
  return gamma_quantile((u - nu) / (1.0 - nu)) - offset;
}

}  // namespace s2sflow
