#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "s2sflow/forecast_data.hpp"
#include "s2sflow/seasonal_spline.hpp"
#include "s2sflow/zaga.hpp"

namespace s2sflow {

/// Ensemble summary statistics used as EMOS predictors.
struct EmosFeatures {
  double ens_mean = 0.0;       // mean of the members
  double frac_nonpos = 0.0;    // fraction of members <= 0
  double mean_abs_diff = 0.0;  // (1/K^2) sum_k sum_k' |m_k - m_k'|
};

/// Throws InputError for fewer than two members.
EmosFeatures compute_features(std::span<const double> members);

/// One training or prediction case.
struct EmosCase {
  EmosFeatures features;
  double day = 0.0;       // days since 1 January of the issue date
  double observed = 0.0;  // inflow; user units or shifted, depending on use
};

/// Coefficients of the three link-function predictors:
///   log mu    = b_mu[0] + b_mu[1] * mean + b_mu[2] * frac_nonpos + s_mu(day)
///   log sigma = b_sigma[0] + b_sigma[1] * mean + b_sigma[2] * mean_abs_diff + s_sigma(day)
///   logit nu  = b_nu[0] + b_nu[1] * mean
/// Splines are stored as their J - 1 free (sum-to-zero) coefficients.
struct EmosCoefficients {
  std::vector<double> mu_beta = {0.0, 0.0, 0.0};
  std::vector<double> mu_spline;
  std::vector<double> sigma_beta = {0.0, 0.0, 0.0};
  std::vector<double> sigma_spline;
  std::vector<double> nu_beta = {0.0, 0.0};

  static EmosCoefficients zeros(int spline_free_size);
  [[nodiscard]] std::vector<double> flatten() const;
  static EmosCoefficients unflatten(std::span<const double> theta, int spline_free_size);
  [[nodiscard]] static std::size_t parameter_count(int spline_free_size) { return 8 + 2 * spline_free_size; }
};

/// Linear predictors (log mu, log sigma, logit nu) for one case.
struct LinkValues {
  double log_mu = 0.0;
  double log_sigma = 0.0;
  double logit_nu = 0.0;
};

LinkValues evaluate_links(const EmosCoefficients& c, const EmosFeatures& x, std::span<const double> spline_contrasts);

struct LoglikResult {
  double value = 0.0;
  std::vector<double> gradient;
};

/// ZAGA log-likelihood of shifted observations (>= 0; exact zeros hit the
/// point mass) under flattened coefficients `theta`, with its analytic
/// gradient. `ridge` subtracts ridge * theta_i^2 for every coefficient
/// except the three intercepts.
LoglikResult zaga_loglik_and_gradient(std::span<const double> theta, std::span<const EmosCase> shifted_cases,
                                      const SeasonalSplineBasis& basis, double ridge = 0.0);

struct EmosFitOptions {
  int knots = 6;
  double ridge = 1e-6;
  int max_iterations = 2000;
  int starts = 3;
  double gradient_tolerance = 1e-9;  // per-case scale
  std::size_t min_cases = 100;
  std::uint64_t seed = 20240601;
  bool standard_errors = true;
};

struct EmosDiagnostics {
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;            // unpenalized, at the optimum
  double penalized_loglik = 0.0;
  double gradient_norm = 0.0;     // infinity norm, per-case scale
  std::vector<double> start_logliks;  // penalized, one per start
  std::size_t n_cases = 0;
};

struct EmosModel {
  HorizonSpec horizon;
  int fold_year = 0;
  double offset = 0.0;
  SeasonalSplineBasis basis{6};
  EmosCoefficients coefficients;
  std::vector<double> standard_errors;  // aligned with coefficients.flatten(); may be empty
  EmosDiagnostics diagnostics;

  /// Predictive distribution (carrying the model offset) for a case.
  [[nodiscard]] ZagaDistribution predict(const EmosFeatures& x, double day) const;
  [[nodiscard]] ZagaDistribution predict(const EmosFeatures& x, Date issue_date) const {
    return predict(x, SeasonalSplineBasis::day_offset(issue_date));
  }
};

/// Maximizes the penalized ZAGA likelihood. `cases` carry observations in
/// user units; the offset max(0, -min observed) is added before fitting.
/// Throws InputError for too few cases and NumericalError when no start
/// converges.
EmosModel fit_emos(std::span<const EmosCase> cases, const HorizonSpec& horizon, int fold_year,
                   const EmosFitOptions& options = {});

/// Observed-information standard errors of the flattened coefficients
/// (NaN where the information matrix is not positive definite).
std::vector<double> emos_standard_errors(const EmosModel& model, std::span<const EmosCase> shifted_cases,
                                         double ridge);

}  // namespace s2sflow
