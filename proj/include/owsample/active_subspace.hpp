#pragma once

// Active-subspace baseline: sample gradients by forward differences, keep the
// leading left singular vectors, and fit a GP on the reduced coordinates.

#include "owsample/benchmarks/problem.hpp"
#include "owsample/gp.hpp"
#include "owsample/optimizer.hpp"

#include <Eigen/SVD>

namespace owsample {

struct ActiveSubspace {
  Matrix basis;             // d x q, orthonormal columns
  Vector singular_values;   // descending
  Eigen::Index evaluations = 0;
};

struct ActiveSubspaceOptions {
  int k = 2;
  double alpha = 2.0;
  Eigen::Index q = 2;
  double fd_step = 1e-4;          // relative to each prior standard deviation
  double noise_variance = 0.0;    // added to every black-box evaluation
};

inline Eigen::Index active_subspace_sample_count(int k, double alpha, Eigen::Index d) {
  return static_cast<Eigen::Index>(std::floor(alpha * k * std::log(static_cast<double>(d))));
}

inline ActiveSubspace build_active_subspace(const BlackBoxProblem& problem,
                                            const ActiveSubspaceOptions& opt, Rng& rng) {
  const Eigen::Index d = problem.dim();
  detail::require(opt.alpha >= 2.0 && opt.alpha <= 10.0, "active subspace: alpha must be in [2, 10]");
  detail::require(opt.k >= 1, "active subspace: k must be >= 1");
  detail::require(opt.q >= 1 && opt.q <= d, "active subspace: q must be in [1, d]");
  const Eigen::Index M = active_subspace_sample_count(opt.k, opt.alpha, d);
  detail::require(M >= 1, "active subspace: sample count is zero");
  const double noise_sd = std::sqrt(std::max(0.0, opt.noise_variance));
  auto observe = [&](const Vector& x) { return problem.evaluate(x) + noise_sd * standard_normal(rng); };

  const Vector h = opt.fd_step * problem.prior->stddev();
  Matrix G(d, M);
  for (Eigen::Index s = 0; s < M; ++s) {
    const Vector x = problem.prior->sample_in_box(problem.bounds, rng);
    const double f0 = observe(x);
    for (Eigen::Index i = 0; i < d; ++i) {
      Vector xp = x;
      xp[i] += h[i];
      G(i, s) = (observe(xp) - f0) / h[i];
    }
  }
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw Error("active subspace: SVD failed");
  ActiveSubspace out;
  out.basis = svd.matrixU().leftCols(opt.q);
  out.singular_values = svd.singularValues();
  out.evaluations = M * (d + 1);
  return out;
}

class ActiveSubspaceSurrogate {
 public:
  ActiveSubspaceSurrogate(Matrix basis, GPModel model, Eigen::Index evaluations)
      : basis_(std::move(basis)), model_(std::move(model)), evaluations_(evaluations) {}

  double operator()(const Vector& x) const { return model_.posterior_mean(basis_.transpose() * x); }
  Vector predict_batch(const Matrix& X) const { return model_.posterior_mean_batch(X * basis_); }

  const Matrix& basis() const { return basis_; }
  const GPModel& model() const { return model_; }
  Eigen::Index evaluations() const { return evaluations_; }

 private:
  Matrix basis_;
  GPModel model_;
  Eigen::Index evaluations_;
};

// Bounding box of Wᵀx over the original box.
inline BoxBounds projected_box(const Matrix& basis, const BoxBounds& box) {
  const Eigen::Index q = basis.cols();
  Vector lo(q), hi(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    lo[j] = hi[j] = 0.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double a = basis(i, j) * box.lo[i], b = basis(i, j) * box.hi[i];
      lo[j] += std::min(a, b);
      hi[j] += std::max(a, b);
    }
  }
  return BoxBounds(lo, hi);
}

inline ActiveSubspaceSurrogate as_surrogate(const ActiveSubspace& asub, const BlackBoxProblem& problem,
                                            Eigen::Index n_surrogate, Rng& rng,
                                            double noise_variance = 0.0, FitOptions fit = {}) {
  const Eigen::Index q = asub.basis.cols();
  detail::require(n_surrogate >= q + 1, "as_surrogate: need at least q + 1 points");
  const BoxBounds zbox = projected_box(asub.basis, problem.bounds);
  const Matrix Z = lhs_design(n_surrogate, zbox, rng);
  const double noise_sd = std::sqrt(std::max(0.0, noise_variance));
  Dataset data;
  data.inputs = Z;
  data.outputs.resize(n_surrogate);
  for (Eigen::Index i = 0; i < n_surrogate; ++i) {
    const Vector x = problem.bounds.project(asub.basis * Z.row(i).transpose());
    data.outputs[i] = problem.evaluate(x) + noise_sd * standard_normal(rng);
  }
  fit.seed = child_seed(rng);
  fit.initial.reset();
  return ActiveSubspaceSurrogate(asub.basis, fit_gp(data, fit), asub.evaluations + n_surrogate);
}

}  // namespace owsample
