#pragma once

// Latin hypercube designs and multi-start maximization of acquisition
// functions over a box.

#include "owsample/core.hpp"
#include "owsample/detail/bfgs.hpp"
#include "owsample/kernel.hpp"

#include <algorithm>
#include <concepts>
#include <numeric>
#include <vector>

namespace owsample {

// n points, one per stratum in every dimension, jittered inside the stratum
// and independently permuted across dimensions.
inline Matrix lhs_design(Eigen::Index n, const BoxBounds& box, Rng& rng) {
  detail::require(n >= 1, "lhs_design: n must be >= 1");
  box.validate();
  const Eigen::Index d = box.dim();
  Matrix X(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = perm.size(); i > 1; --i) {
      const auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(r, i - 1)]);
    }
    const double w = box.hi[j] - box.lo[j];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + uniform01(rng)) /
                       static_cast<double>(n);
      X(i, j) = std::min(box.hi[j], box.lo[j] + u * w);
    }
  }
  return X;
}

template <typename F>
concept AcquisitionObjective = requires(const F& f, const Vector& x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.value_and_grad(x) } -> std::convertible_to<ValueGrad>;
};

struct MaximizeOptions {
  int n_restarts = 10;
  int n_probes = 512;
  int max_steps = 50;
  double grad_tol = 1e-8;  // relative to the objective scale
};

struct MaximizeResult {
  Vector x;
  double value = -std::numeric_limits<double>::infinity();
  bool no_improvement = false;  // no local search improved on its start
};

// Local searches run a projected quasi-Newton ascent in box-normalized
// coordinates from n_restarts LHS points plus the best of n_probes uniform
// probes; the best terminal point wins.
template <AcquisitionObjective F>
MaximizeResult maximize_acquisition(const F& f, const BoxBounds& box, Rng& rng,
                                    const MaximizeOptions& opt = {}) {
  const Eigen::Index d = box.dim();
  const Vector width = box.width();

  MaximizeResult best;
  for (int p = 0; p < opt.n_probes; ++p) {
    Vector x = uniform_in_box(box, rng);
    const double v = f.value(x);
    if (v > best.value) {
      best.value = v;
      best.x = std::move(x);
    }
  }
  std::vector<Vector> starts;
  if (opt.n_restarts > 0) {
    const Matrix S = lhs_design(opt.n_restarts, box, rng);
    for (Eigen::Index i = 0; i < S.rows(); ++i) starts.push_back(S.row(i).transpose());
  }
  if (best.x.size() == d) starts.push_back(best.x);
  if (starts.empty()) starts.push_back(box.center());

  const double scale = std::isfinite(best.value) && best.value > 0.0 ? best.value : 1.0;
  auto to_box = [&](const Vector& u) { return Vector(box.lo + u.cwiseProduct(width)); };
  detail::ObjectiveWithGrad neg = [&](const Vector& u, Vector& g) -> double {
    const auto vg = f.value_and_grad(to_box(u));
    if (!std::isfinite(vg.value)) return std::numeric_limits<double>::infinity();
    g = -vg.grad.cwiseProduct(width) / scale;
    return -vg.value / scale;
  };
  const Vector lo = Vector::Zero(d), hi = Vector::Ones(d);
  detail::BfgsOptions bopt;
  bopt.max_iter = opt.max_steps;
  bopt.gtol = opt.grad_tol;
  bopt.ftol = 1e-12;

  bool improved = false;
  for (const auto& s : starts) {
    const Vector u0 = (s - box.lo).cwiseQuotient(width).cwiseMax(0.0).cwiseMin(1.0);
    const double v0 = f.value(to_box(u0));
    const auto r = detail::minimize_box_bfgs(neg, u0, lo, hi, bopt);
    if (r.x.size() != d) continue;
    const Vector x = box.project(to_box(r.x));
    const double v = f.value(x);
    if (v > v0) improved = true;
    if (v > best.value || best.x.size() != d) {
      best.value = v;
      best.x = x;
    }
  }
  best.no_improvement = !improved;
  if (best.x.size() != d) {
    best.x = box.center();
    best.value = f.value(best.x);
  }
  return best;
}

}  // namespace owsample
