#pragma once

// Nonlinear oscillator driven by a Gaussian random forcing that is
// parameterized by a truncated Karhunen-Loève expansion.

#include "owsample/benchmarks/problem.hpp"

#include <Eigen/Eigenvalues>

namespace owsample {

struct KLExpansion {
  Vector eigenvalues;  // descending
  Matrix modes;        // m x n_t, sampled on the uniform grid
  double dt = 0.0;
  double variance = 0.0;
  double corr_length = 0.0;

  Eigen::Index size() const { return eigenvalues.size(); }
  Eigen::Index n_times() const { return modes.cols(); }
  double horizon() const { return dt * static_cast<double>(n_times() - 1); }

  double correlation(double t1, double t2) const {
    const double tau = t1 - t2;
    return variance * std::exp(-tau * tau / (2.0 * corr_length * corr_length));
  }

  // Nyström extension of the modes to arbitrary times (m x len).
  Matrix modes_at(const Vector& times) const {
    Matrix out(size(), times.size());
    Vector c(n_times());
    for (Eigen::Index k = 0; k < times.size(); ++k) {
      for (Eigen::Index j = 0; j < n_times(); ++j)
        c[j] = correlation(times[k], dt * static_cast<double>(j)) * dt;
      out.col(k) = (modes * c).cwiseQuotient(eigenvalues);
    }
    return out;
  }
};

// Eigenpairs of the correlation operator on a uniform grid over [0, T]
// (rectangle-rule weights dt); modes scaled to unit norm under the same rule.
inline KLExpansion kl_expansion(double variance, double corr_length, double horizon, Eigen::Index m,
                                Eigen::Index n_t) {
  detail::require(variance > 0.0 && corr_length > 0.0 && horizon > 0.0,
                  "kl_expansion: parameters must be > 0");
  detail::require(n_t >= 2 && m >= 1 && m <= n_t, "kl_expansion: need 1 <= m <= n_t");
  KLExpansion kl;
  kl.dt = horizon / static_cast<double>(n_t - 1);
  kl.variance = variance;
  kl.corr_length = corr_length;
  Matrix C(n_t, n_t);
  for (Eigen::Index a = 0; a < n_t; ++a)
    for (Eigen::Index b = 0; b < n_t; ++b)
      C(a, b) = kl.correlation(kl.dt * static_cast<double>(a), kl.dt * static_cast<double>(b)) * kl.dt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  if (es.info() != Eigen::Success) throw Error("kl_expansion: eigen-decomposition failed");
  kl.eigenvalues.resize(m);
  kl.modes.resize(m, n_t);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = n_t - 1 - i;  // ascending order from the solver
    kl.eigenvalues[i] = std::max(0.0, es.eigenvalues()[src]);
    Vector v = es.eigenvectors().col(src);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index lead = 0;
    v.cwiseAbs().maxCoeff(&lead);
    if (v[lead] < 0.0) v = -v;
    kl.modes.row(i) = v.transpose() / std::sqrt(kl.dt);
  }
  return kl;
}

struct OscillatorParams {
  double damping = 1.5;     // δ
  double stiffness = 1.0;   // α
  double cubic = 0.1;       // β
  double u1 = 0.5;
  double u2 = 1.5;
};

// Odd, piecewise restoring force.
inline double restoring_force(double u, const OscillatorParams& p) {
  const double a = std::abs(u);
  double f;
  if (a <= p.u1)
    f = p.stiffness * a;
  else if (a <= p.u2)
    f = p.stiffness * p.u1;
  else
    f = p.stiffness * p.u1 + p.cubic * (a - p.u2) * (a - p.u2) * (a - p.u2);
  return u < 0.0 ? -f : f;
}

class Oscillator {
 public:
  explicit Oscillator(KLExpansion kl, OscillatorParams params = {})
      : kl_(std::move(kl)), params_(params) {
    const Eigen::Index n = kl_.n_times();
    Vector mids(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) mids[i] = kl_.dt * (static_cast<double>(i) + 0.5);
    mid_modes_ = kl_.modes_at(mids);
  }

  const KLExpansion& kl() const { return kl_; }
  const OscillatorParams& params() const { return params_; }

  // Time-mean of u over [0, T], RK4 with `substeps` steps per grid interval.
  double operator()(const Vector& x, int substeps = 1) const {
    detail::require_dim(x.size(), kl_.size(), "oscillator");
    detail::require(substeps >= 1, "oscillator: substeps must be >= 1");
    const Eigen::Index n = kl_.n_times();
    const Eigen::Index steps = (n - 1) * substeps;
    const double h = kl_.dt / substeps;
    Vector forcing(2 * steps + 1);  // values at every half step
    if (substeps == 1) {
      const Vector at_nodes = kl_.modes.transpose() * x;
      const Vector at_mids = mid_modes_.transpose() * x;
      for (Eigen::Index i = 0; i < steps; ++i) {
        forcing[2 * i] = at_nodes[i];
        forcing[2 * i + 1] = at_mids[i];
      }
      forcing[2 * steps] = at_nodes[n - 1];
    } else {
      Vector times(2 * steps + 1);
      for (Eigen::Index i = 0; i < times.size(); ++i) times[i] = 0.5 * h * static_cast<double>(i);
      forcing = kl_.modes_at(times).transpose() * x;
    }

    auto accel = [&](double u, double v, double f) {
      return f - params_.damping * v - restoring_force(u, params_);
    };
    double u = 0.0, v = 0.0;
    double integral = 0.0;
    double prev_u = 0.0;
    for (Eigen::Index i = 0; i < steps; ++i) {
      const double f0 = forcing[2 * i], fm = forcing[2 * i + 1], f1 = forcing[2 * i + 2];
      const double k1u = v, k1v = accel(u, v, f0);
      const double k2u = v + 0.5 * h * k1v, k2v = accel(u + 0.5 * h * k1u, v + 0.5 * h * k1v, fm);
      const double k3u = v + 0.5 * h * k2v, k3v = accel(u + 0.5 * h * k2u, v + 0.5 * h * k2v, fm);
      const double k4u = v + h * k3v, k4v = accel(u + h * k3u, v + h * k3v, f1);
      u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if (!std::isfinite(u) || !std::isfinite(v))
        throw IntegrationError("oscillator: non-finite state");
      integral += 0.5 * h * (prev_u + u);
      prev_u = u;
    }
    return integral / kl_.horizon();
  }

 private:
  KLExpansion kl_;
  OscillatorParams params_;
  Matrix mid_modes_;
};

struct OscillatorSetup {
  double variance = 0.1;
  double corr_length = 4.0;
  double horizon = 25.0;
  Eigen::Index n_times = 501;
  double box_sds = 6.0;
};

inline BlackBoxProblem make_oscillator(Eigen::Index m, const OscillatorSetup& s = {}) {
  auto osc = std::make_shared<const Oscillator>(
      kl_expansion(s.variance, s.corr_length, s.horizon, m, s.n_times));
  const Vector lambda = osc->kl().eigenvalues;
  return {detail::concat("oscillator-m", m),
          BoxBounds::symmetric(s.box_sds * lambda.cwiseSqrt()),
          std::make_shared<const InputPrior>(
              InputPrior::gaussian(Vector::Zero(m), Matrix(lambda.asDiagonal()))),
          [osc](const Vector& x) { return (*osc)(x); }};
}

}  // namespace owsample
