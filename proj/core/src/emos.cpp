#include "s2sflow/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optimize.hpp"
#include "s2sflow/errors.hpp"
#include "s2sflow/random.hpp"

namespace s2sflow {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Layout {
  int free;  // spline free size
  [[nodiscard]] std::size_t mu() const { return 0; }
  [[nodiscard]] std::size_t mu_spline() const { return 3; }
  [[nodiscard]] std::size_t sigma() const { return 3 + static_cast<std::size_t>(free); }
  [[nodiscard]] std::size_t sigma_spline() const { return 6 + static_cast<std::size_t>(free); }
  [[nodiscard]] std::size_t nu() const { return 6 + 2 * static_cast<std::size_t>(free); }
  [[nodiscard]] std::size_t size() const { return 8 + 2 * static_cast<std::size_t>(free); }
  [[nodiscard]] bool is_intercept(std::size_t i) const { return i == mu() || i == sigma() || i == nu(); }
};

// Cached design: spline contrasts per case.
class LoglikEvaluator {
public:
  LoglikEvaluator(std::span<const EmosCase> cases, const SeasonalSplineBasis& basis)
      : cases_(cases), layout_{basis.free_size()} {
    contrasts_.reserve(cases.size() * static_cast<std::size_t>(layout_.free));
    for (const auto& c : cases) {
      const auto s = basis.contrasts(c.day);
      contrasts_.insert(contrasts_.end(), s.begin(), s.end());
    }
  }

  [[nodiscard]] std::size_t size() const { return cases_.size(); }
  [[nodiscard]] const Layout& layout() const { return layout_; }

  // Penalized log-likelihood; writes the gradient if `grad` is non-null.
  double evaluate(std::span<const double> theta, double ridge, double* grad) const {
    const std::size_t p = layout_.size();
    const auto f = static_cast<std::size_t>(layout_.free);
    if (grad != nullptr) std::fill(grad, grad + p, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cases_.size(); ++i) {
      const auto& c = cases_[i];
      const double* s = contrasts_.data() + i * f;
      const double m = c.features.ens_mean;

      double eta_mu = theta[0] + theta[1] * m + theta[2] * c.features.frac_nonpos;
      double eta_sigma = theta[layout_.sigma()] + theta[layout_.sigma() + 1] * m +
                         theta[layout_.sigma() + 2] * c.features.mean_abs_diff;
      for (std::size_t j = 0; j < f; ++j) {
        eta_mu += theta[layout_.mu_spline() + j] * s[j];
        eta_sigma += theta[layout_.sigma_spline() + j] * s[j];
      }
      const double eta_nu = theta[layout_.nu()] + theta[layout_.nu() + 1] * m;

      const double y = c.observed;
      double d_mu = 0.0, d_sigma = 0.0, d_nu = 0.0;
      if (y <= 0.0) {
        total += -softplus(-eta_nu);
        d_nu = 1.0 - logistic(eta_nu);
      } else {
        const double a = std::exp(-2.0 * eta_sigma);
        const double log_scale = 2.0 * eta_sigma + eta_mu;
        const double log_y = std::log(y);
        const double ratio = y * std::exp(-eta_mu);  // y / mu
        total += -softplus(eta_nu) - a * log_scale + (a - 1.0) * log_y - ratio * a - log_gamma(a);
        d_nu = -logistic(eta_nu);
        d_mu = a * (ratio - 1.0);
        d_sigma = 2.0 * a * (ratio - (log_y - eta_mu) - 1.0 + 2.0 * eta_sigma + digamma(a));
      }
      if (grad != nullptr) {
        grad[0] += d_mu;
        grad[1] += d_mu * m;
        grad[2] += d_mu * c.features.frac_nonpos;
        grad[layout_.sigma()] += d_sigma;
        grad[layout_.sigma() + 1] += d_sigma * m;
        grad[layout_.sigma() + 2] += d_sigma * c.features.mean_abs_diff;
        for (std::size_t j = 0; j < f; ++j) {
          grad[layout_.mu_spline() + j] += d_mu * s[j];
          grad[layout_.sigma_spline() + j] += d_sigma * s[j];
        }
        grad[layout_.nu()] += d_nu;
        grad[layout_.nu() + 1] += d_nu * m;
      }
    }
    if (ridge > 0.0) {
      for (std::size_t k = 0; k < p; ++k) {
        if (layout_.is_intercept(k)) continue;
        total -= ridge * theta[k] * theta[k];
        if (grad != nullptr) grad[k] -= 2.0 * ridge * theta[k];
      }
    }
    return total;
  }

  // Hessian of the penalized log-likelihood by central differences of the
  // analytic gradient.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta, double ridge) const {
    const auto p = static_cast<Eigen::Index>(layout_.size());
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd gp(p), gm(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const double step = 1e-5 * std::max(1.0, std::abs(theta[k]));
      Eigen::VectorXd t = theta;
      t[k] = theta[k] + step;
      evaluate({t.data(), static_cast<std::size_t>(p)}, ridge, gp.data());
      t[k] = theta[k] - step;
      evaluate({t.data(), static_cast<std::size_t>(p)}, ridge, gm.data());
      h.col(k) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
  }

private:
  std::span<const EmosCase> cases_;
  Layout layout_;
  std::vector<double> contrasts_;
};

void check_cases(std::span<const EmosCase> cases) {
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    if (!std::isfinite(c.observed) || !std::isfinite(c.day) || !std::isfinite(c.features.ens_mean) ||
        !std::isfinite(c.features.frac_nonpos) || !std::isfinite(c.features.mean_abs_diff)) {
      throw InputError(fmt::format("EMOS: case {} has non-finite features or observation", i));
    }
  }
}

Eigen::VectorXd initial_guess(std::span<const EmosCase> shifted, const Layout& layout) {
  std::size_t zeros = 0;
  double sum = 0.0, sum2 = 0.0;
  std::size_t pos = 0;
  for (const auto& c : shifted) {
    if (c.observed <= 0.0) {
      ++zeros;
    } else {
      sum += c.observed;
      sum2 += c.observed * c.observed;
      ++pos;
    }
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  double mean = pos > 0 ? sum / static_cast<double>(pos) : 1.0;
  if (!(mean > 0.0)) mean = 1.0;
  const double var = pos > 1 ? std::max(0.0, sum2 / static_cast<double>(pos) - mean * mean) : mean * mean;
  const double cv = std::clamp(std::sqrt(var) / mean, 0.05, 5.0);
  const double nu = std::clamp(static_cast<double>(zeros) / static_cast<double>(shifted.size()), 1e-3, 0.9);
  theta[static_cast<Eigen::Index>(layout.mu())] = std::log(mean);
  theta[static_cast<Eigen::Index>(layout.sigma())] = std::log(cv);
  theta[static_cast<Eigen::Index>(layout.nu())] = std::log(nu / (1.0 - nu));
  return theta;
}

struct StartResult {
  Eigen::VectorXd theta;
  double penalized = -std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

StartResult run_start(const LoglikEvaluator& ev, Eigen::VectorXd theta0, const EmosFitOptions& opt) {
  const double n = static_cast<double>(ev.size());
  const auto p = static_cast<std::size_t>(theta0.size());
  detail::Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double v = ev.evaluate({x.data(), p}, opt.ridge, g.data());
    g /= -n;
    return -v / n;
  };
  // BFGS gets close; Newton steps on the finite-difference Hessian finish.
  // BFGS alone crawls near the optimum on badly scaled spline coefficients.
  detail::MinimizeOptions mo;
  mo.max_iterations = opt.max_iterations;
  mo.gradient_tolerance = std::max(opt.gradient_tolerance, 1e-5);
  auto r = detail::bfgs_minimize(objective, std::move(theta0), mo);

  Eigen::VectorXd g(static_cast<Eigen::Index>(p));
  double f = objective(r.x, g);
  for (int it = 0; it < 30 && std::isfinite(f); ++it) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= 1e-3 * opt.gradient_tolerance) break;
    const Eigen::MatrixXd h = -ev.hessian(r.x, opt.ridge) / n;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd step = ldlt.solve(-g);
    bool moved = false;
    double t = 1.0;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      Eigen::VectorXd g_new(static_cast<Eigen::Index>(p));
      const Eigen::VectorXd x_new = r.x + t * step;
      const double f_new = objective(x_new, g_new);
      if (!std::isfinite(f_new)) continue;
      const bool decreases = f_new <= f + 1e-4 * t * g.dot(step);
      const bool flatter = f_new <= f + 1e-14 * std::abs(f) && g_new.lpNorm<Eigen::Infinity>() < gnorm;
      if (decreases || flatter) {
        r.x = x_new;
        f = f_new;
        g = g_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  StartResult out;
  out.theta = r.x;
  out.penalized = -f * n;
  out.gradient_norm = g.lpNorm<Eigen::Infinity>();
  out.iterations = r.iterations;
  out.converged = std::isfinite(f) && out.gradient_norm <= std::max(opt.gradient_tolerance, 1e-7);
  return out;
}

}  // namespace

EmosFeatures compute_features(std::span<const double> members) {
  const std::size_t k = members.size();
  if (k < 2) throw InputError(fmt::format("EMOS features: {} members, need at least 2", k));
  EmosFeatures x;
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t nonpos = 0;
  double weighted = 0.0;  // sum_i (2i - K - 1) x_(i), i 1-based
  for (std::size_t i = 0; i < k; ++i) {
    sum += sorted[i];
    if (sorted[i] <= 0.0) ++nonpos;
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(k) - 1.0) * sorted[i];
  }
  const double kd = static_cast<double>(k);
  x.ens_mean = sum / kd;
  x.frac_nonpos = static_cast<double>(nonpos) / kd;
  x.mean_abs_diff = 2.0 * weighted / (kd * kd);
  return x;
}

EmosCoefficients EmosCoefficients::zeros(int spline_free_size) {
  EmosCoefficients c;
  c.mu_spline.assign(static_cast<std::size_t>(spline_free_size), 0.0);
  c.sigma_spline.assign(static_cast<std::size_t>(spline_free_size), 0.0);
  return c;
}

std::vector<double> EmosCoefficients::flatten() const {
  std::vector<double> t;
  t.reserve(parameter_count(static_cast<int>(mu_spline.size())));
  t.insert(t.end(), mu_beta.begin(), mu_beta.end());
  t.insert(t.end(), mu_spline.begin(), mu_spline.end());
  t.insert(t.end(), sigma_beta.begin(), sigma_beta.end());
  t.insert(t.end(), sigma_spline.begin(), sigma_spline.end());
  t.insert(t.end(), nu_beta.begin(), nu_beta.end());
  return t;
}

EmosCoefficients EmosCoefficients::unflatten(std::span<const double> theta, int spline_free_size) {
  const Layout l{spline_free_size};
  if (theta.size() != l.size()) {
    throw InputError(fmt::format("EMOS coefficients: expected {} values, got {}", l.size(), theta.size()));
  }
  const auto f = static_cast<std::size_t>(spline_free_size);
  EmosCoefficients c;
  c.mu_beta.assign(theta.begin(), theta.begin() + 3);
  c.mu_spline.assign(theta.begin() + 3, theta.begin() + 3 + static_cast<long>(f));
  c.sigma_beta.assign(theta.begin() + static_cast<long>(l.sigma()), theta.begin() + static_cast<long>(l.sigma()) + 3);
  c.sigma_spline.assign(theta.begin() + static_cast<long>(l.sigma_spline()),
                        theta.begin() + static_cast<long>(l.sigma_spline() + f));
  c.nu_beta.assign(theta.begin() + static_cast<long>(l.nu()), theta.end());
  return c;
}

LinkValues evaluate_links(const EmosCoefficients& c, const EmosFeatures& x, std::span<const double> s) {
  LinkValues v;
  v.log_mu = c.mu_beta[0] + c.mu_beta[1] * x.ens_mean + c.mu_beta[2] * x.frac_nonpos;
  v.log_sigma = c.sigma_beta[0] + c.sigma_beta[1] * x.ens_mean + c.sigma_beta[2] * x.mean_abs_diff;
  for (std::size_t j = 0; j < s.size(); ++j) {
    v.log_mu += c.mu_spline[j] * s[j];
    v.log_sigma += c.sigma_spline[j] * s[j];
  }
  v.logit_nu = c.nu_beta[0] + c.nu_beta[1] * x.ens_mean;
  return v;
}

LoglikResult zaga_loglik_and_gradient(std::span<const double> theta, std::span<const EmosCase> shifted_cases,
                                      const SeasonalSplineBasis& basis, double ridge) {
  if (shifted_cases.empty()) throw InputError("ZAGA log-likelihood: empty batch");
  const LoglikEvaluator ev(shifted_cases, basis);
  if (theta.size() != ev.layout().size()) {
    throw InputError(fmt::format("ZAGA log-likelihood: expected {} coefficients, got {}", ev.layout().size(),
                                 theta.size()));
  }
  for (const auto& c : shifted_cases) {
    if (c.observed < 0.0) throw InputError("ZAGA log-likelihood: shifted observations must be >= 0");
  }
  LoglikResult r;
  r.gradient.assign(theta.size(), 0.0);
  r.value = ev.evaluate(theta, ridge, r.gradient.data());
  return r;
}

ZagaDistribution EmosModel::predict(const EmosFeatures& x, double day) const {
  const auto s = basis.contrasts(day);
  const auto v = evaluate_links(coefficients, x, s);
  ZagaDistribution d;
  d.mu = std::exp(v.log_mu);
  d.sigma = std::exp(v.log_sigma);
  d.nu = std::min(logistic(v.logit_nu), 1.0 - 1e-12);
  d.offset = offset;
  d.validate();
  return d;
}

EmosModel fit_emos(std::span<const EmosCase> cases, const HorizonSpec& horizon, int fold_year,
                   const EmosFitOptions& options) {
  if (cases.size() < options.min_cases) {
    throw InputError(fmt::format("EMOS ({}, fold {}): {} training cases, need at least {}", horizon.name, fold_year,
                                 cases.size(), options.min_cases));
  }
  check_cases(cases);

  EmosModel model;
  model.horizon = horizon;
  model.fold_year = fold_year;
  model.basis = SeasonalSplineBasis(options.knots);
  double min_obs = std::numeric_limits<double>::infinity();
  for (const auto& c : cases) min_obs = std::min(min_obs, c.observed);
  model.offset = std::max(0.0, -min_obs);

  std::vector<EmosCase> shifted(cases.begin(), cases.end());
  for (auto& c : shifted) c.observed += model.offset;

  const LoglikEvaluator ev(shifted, model.basis);
  const Layout& layout = ev.layout();
  const Eigen::VectorXd theta0 = initial_guess(shifted, layout);

  std::vector<StartResult> results;
  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Eigen::VectorXd init = theta0;
    if (start > 0) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(start)));
      for (Eigen::Index k = 0; k < init.size(); ++k) {
        const double scale = layout.is_intercept(static_cast<std::size_t>(k)) ? 0.2 : 0.05;
        init[k] += scale * rng.normal();
      }
    }
    results.push_back(run_start(ev, init, options));
  }

  const auto best = std::max_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
    if (a.converged != b.converged) return !a.converged;
    return a.penalized < b.penalized;
  });
  auto& diag = model.diagnostics;
  diag.n_cases = cases.size();
  for (const auto& r : results) diag.start_logliks.push_back(r.penalized);
  diag.converged = best->converged;
  diag.iterations = best->iterations;
  diag.gradient_norm = best->gradient_norm;
  diag.penalized_loglik = best->penalized;
  const auto p = static_cast<std::size_t>(best->theta.size());
  diag.loglik = ev.evaluate({best->theta.data(), p}, 0.0, nullptr);
  if (!best->converged) {
    throw NumericalError(fmt::format(
        "EMOS ({}, fold {}): optimizer did not converge after {} iterations (gradient norm {:.3g}, loglik {:.6f})",
        horizon.name, fold_year, best->iterations, best->gradient_norm, best->penalized));
  }
  model.coefficients = EmosCoefficients::unflatten({best->theta.data(), p}, layout.free);
  if (options.standard_errors) model.standard_errors = emos_standard_errors(model, shifted, options.ridge);
  return model;
}

std::vector<double> emos_standard_errors(const EmosModel& model, std::span<const EmosCase> shifted_cases,
                                         double ridge) {
  const LoglikEvaluator ev(shifted_cases, model.basis);
  const auto theta_v = model.coefficients.flatten();
  const Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(theta_v.data(), static_cast<Eigen::Index>(theta_v.size()));
  const Eigen::MatrixXd info = -ev.hessian(theta, ridge);
  std::vector<double> se(theta_v.size(), kMissing);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return se;
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  for (std::size_t i = 0; i < se.size(); ++i) {
    const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    se[i] = v > 0.0 ? std::sqrt(v) : kMissing;
  }
  return se;
}

}  // namespace s2sflow
