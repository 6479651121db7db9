#pragma once

// BFGS minimizer with Armijo backtracking. Internal to the EMOS fitter.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace s2sflow::detail {

struct MinimizeOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-9;  // on the infinity norm
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline MinimizeResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opt) {
  const Eigen::Index n = x0.size();
  MinimizeResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(n);
  r.value = f(r.x, g);
  if (!std::isfinite(r.value)) return r;
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stalls = 0;

  for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
    r.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (r.gradient_norm <= opt.gradient_tolerance) {
      r.converged = true;
      return r;
    }
    Eigen::VectorXd dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      scaled = false;
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = r.x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent possible along this direction: restart from steepest
      // descent once, then give up.
      if (++stalls > 2) break;
      h_inv.setIdentity();
      scaled = false;
      continue;
    }
    stalls = 0;

    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    r.x = x_new;
    r.value = f_new;
    g = g_new;
  }
  r.gradient_norm = g.lpNorm<Eigen::Infinity>();
  r.converged = r.gradient_norm <= opt.gradient_tolerance;
  return r;
}

}  // namespace s2sflow::detail
