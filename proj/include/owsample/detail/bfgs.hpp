#pragma once

// Projected quasi-Newton minimizer for small box-constrained problems
// (GP hyperparameters live in a log-space box).

#include "owsample/core.hpp"

#include <functional>

namespace owsample::detail {

struct BfgsOptions {
  int max_iter = 100;
  double gtol = 1e-6;
  double ftol = 1e-10;
  int max_backtracks = 40;
};

struct BfgsResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// `fg(x, grad)` returns f(x) and fills grad; it may return +inf to reject x.
using ObjectiveWithGrad = std::function<double(const Vector&, Vector&)>;

inline BfgsResult minimize_box_bfgs(const ObjectiveWithGrad& fg, const Vector& x0,
                                    const Vector& lo, const Vector& hi,
                                    const BfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  auto project = [&](const Vector& v) { return Vector(v.cwiseMax(lo).cwiseMin(hi)); };

  BfgsResult res;
  Vector x = project(x0);
  Vector g(n);
  double f = fg(x, g);
  if (!std::isfinite(f)) return res;

  Matrix H = Matrix::Identity(n, n);
  bool fresh = true;
  auto projected_grad_norm = [&](const Vector& xx, const Vector& gg) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double gi = gg[i];
      if ((xx[i] <= lo[i] && gi > 0.0) || (xx[i] >= hi[i] && gi < 0.0)) gi = 0.0;
      m = std::max(m, std::abs(gi));
    }
    return m;
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it + 1;
    if (projected_grad_norm(x, g) < opt.gtol) {
      res.converged = true;
      break;
    }
    Vector p = -H * g;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= lo[i] && p[i] < 0.0;
      const bool at_hi = x[i] >= hi[i] && p[i] > 0.0;
      if (at_lo || at_hi) p[i] = 0.0;
    }
    if (p.dot(g) >= 0.0) {
      H.setIdentity();
      fresh = true;
      p = -g;
      for (Eigen::Index i = 0; i < n; ++i)
        if ((x[i] <= lo[i] && p[i] < 0.0) || (x[i] >= hi[i] && p[i] > 0.0)) p[i] = 0.0;
      if (p.squaredNorm() == 0.0) {
        res.converged = true;
        break;
      }
    }

    double t = 1.0;
    if (fresh) t = std::min(1.0, 1.0 / std::max(1e-12, p.lpNorm<Eigen::Infinity>()));
    Vector x_new, g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_new = project(x + t * p);
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      H.setIdentity();
      fresh = true;
      continue;
    }

    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = f;
    x = x_new;
    f = f_new;
    g = g_new;
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
      fresh = false;
    }
    if (std::abs(f_old - f) <= opt.ftol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = f;
  return res;
}

}  // namespace owsample::detail
