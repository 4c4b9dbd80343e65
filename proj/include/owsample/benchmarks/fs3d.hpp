#pragma once

// A three-dimensional system with intermittent bursts in z, its danger map
// (largest z reached over a horizon), and the PCA coordinates the search
// runs in, optionally padded with inert dimensions.

#include "owsample/benchmarks/problem.hpp"

#include <Eigen/SVD>

namespace owsample {

struct BurstSystem {
  double alpha = 0.02;
  double omega = 2.0 * kPi;
  double lambda = 0.1;
  double beta = 0.7;

  Eigen::Vector3d rhs(const Eigen::Vector3d& s) const {
    const double x = s[0], y = s[1], z = s[2];
    const double x2 = x * x;
    return {alpha * x + omega * y + alpha * x2 * x2 * x2 + 2.0 * omega * x * y + 5.0 * z * z,
            -omega * x + alpha * y - omega * x2 + 6.0 * alpha * x * y,
            -lambda * z - (lambda + beta) * x * z};
  }

  Eigen::Vector3d rk4_step(const Eigen::Vector3d& s, double h) const {
    const Eigen::Vector3d k1 = rhs(s);
    const Eigen::Vector3d k2 = rhs(s + 0.5 * h * k1);
    const Eigen::Vector3d k3 = rhs(s + 0.5 * h * k2);
    const Eigen::Vector3d k4 = rhs(s + h * k3);
    return s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

inline constexpr double kBlowUpNorm = 1e6;

// max z(t) over t in [0, horizon], initial state included.
inline double danger_map(const Eigen::Vector3d& x0, double horizon = 50.0, double dt = 0.01,
                         const BurstSystem& sys = {}) {
  detail::require(horizon > 0.0 && dt > 0.0, "danger_map: horizon and dt must be > 0");
  const auto steps = static_cast<long>(std::llround(horizon / dt));
  Eigen::Vector3d s = x0;
  double best = s[2];
  for (long i = 0; i < steps; ++i) {
    s = sys.rk4_step(s, dt);
    if (!s.allFinite() || s.norm() > kBlowUpNorm)
      throw IntegrationError(detail::concat("danger_map: trajectory blew up at t=",
                                            dt * static_cast<double>(i + 1)));
    best = std::max(best, s[2]);
  }
  return best;
}

struct PCAReduction {
  Vector mean;         // D
  Matrix basis;        // D x q, orthonormal columns
  Vector eigenvalues;  // q, descending
  Eigen::Index dummy_dims = 0;
  double dummy_half_width = 0.2;

  Eigen::Index reduced_dim() const { return basis.cols(); }
  Eigen::Index dim() const { return reduced_dim() + dummy_dims; }

  Vector project(const Vector& state) const { return basis.transpose() * (state - mean); }
  // Only the leading reduced coordinates are used; padding is inert.
  Vector lift(const Vector& coords) const {
    return mean + basis * coords.head(reduced_dim());
  }
};

// Centered PCA via SVD; each basis vector's largest entry is made positive.
inline PCAReduction pca_reduce(const Matrix& snapshots, Eigen::Index q, Eigen::Index dummy_dims = 0) {
  detail::require(snapshots.rows() > q, "pca_reduce: need more snapshots than components");
  detail::require(q >= 1 && q <= snapshots.cols(), "pca_reduce: q out of range");
  detail::require(dummy_dims >= 0, "pca_reduce: dummy_dims must be >= 0");
  PCAReduction p;
  p.mean = snapshots.colwise().mean().transpose();
  const Matrix C = snapshots.rowwise() - p.mean.transpose();
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const double n1 = static_cast<double>(snapshots.rows() - 1);
  detail::require(s[q - 1] > 1e-12 * std::max(1.0, s[0]), "pca_reduce: snapshots are rank deficient");
  p.basis = svd.matrixV().leftCols(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::Index lead = 0;
    p.basis.col(j).cwiseAbs().maxCoeff(&lead);
    if (p.basis(lead, j) < 0.0) p.basis.col(j) *= -1.0;
  }
  p.eigenvalues = s.head(q).array().square() / n1;
  p.dummy_dims = dummy_dims;
  return p;
}

struct BurstSetup {
  Eigen::Vector3d start{0.1, 0.0, 0.01};
  double burn_in = 100.0;
  double record = 2000.0;
  double sample_every = 0.2;
  double dt = 0.01;
  double horizon = 50.0;
  double box_sds = 5.0;  // half-width in PCA standard deviations
};

inline Matrix burst_trajectory(const BurstSetup& s, const BurstSystem& sys = {}) {
  const auto per_sample = static_cast<long>(std::llround(s.sample_every / s.dt));
  const auto n = static_cast<Eigen::Index>(std::llround(s.record / s.sample_every));
  Eigen::Vector3d x = s.start;
  for (long i = 0, m = std::llround(s.burn_in / s.dt); i < m; ++i) x = sys.rk4_step(x, s.dt);
  Matrix out(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (long i = 0; i < per_sample; ++i) x = sys.rk4_step(x, s.dt);
    out.row(k) = x.transpose();
  }
  return out;
}

// Deterministic: rebuilding it reproduces the coordinates a problem uses.
inline PCAReduction burst_reduction(const BurstSetup& s = {}, Eigen::Index dummy_dims = 0) {
  return pca_reduce(burst_trajectory(s), 3, dummy_dims);
}

// d = 3 reduced coordinates plus d - 3 inert ones.
inline BlackBoxProblem make_burst_problem(Eigen::Index d, const BurstSetup& s = {}) {
  detail::require(d >= 3, "make_burst_problem: d must be >= 3");
  auto pca = std::make_shared<const PCAReduction>(burst_reduction(s, d - 3));
  Vector half(d), var(d);
  half.head(3) = s.box_sds * pca->eigenvalues.cwiseSqrt();
  var.head(3) = pca->eigenvalues;
  half.tail(d - 3).setConstant(pca->dummy_half_width);
  var.tail(d - 3).setOnes();
  const double horizon = s.horizon, dt = s.dt;
  return {d == 3 ? std::string("fs3d") : detail::concat("fs3d-dummy-", d),
          BoxBounds::symmetric(half),
          std::make_shared<const InputPrior>(InputPrior::gaussian(Vector::Zero(d), Matrix(var.asDiagonal()))),
          [pca, horizon, dt](const Vector& x) {
            const Vector st = pca->lift(x);
            return danger_map(Eigen::Vector3d(st[0], st[1], st[2]), horizon, dt);
          }};
}

}  // namespace owsample
