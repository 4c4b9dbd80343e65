#pragma once

// RBF kernel with automatic relevance determination and the closed-form
// kernel-product integrals that make IVR-type acquisitions analytic.
//
// Convention: `lengthscales` holds the diagonal of Θ, the matrix that
// appears directly in the exponent  k = σ_f² exp(-(x-x')ᵀ Θ⁻¹ (x-x') / 2).
// Its entries therefore carry squared input units.

#include "owsample/core.hpp"

#include <utility>

namespace owsample {

struct KernelHyperparams {
  double signal_variance = 1.0;  // σ_f²
  Vector lengthscales;           // diag(Θ)
  double noise_variance = 0.0;   // σ_ε²

  Eigen::Index dim() const { return lengthscales.size(); }

  void validate() const {
    detail::require(std::isfinite(signal_variance) && signal_variance > 0.0,
                    "KernelHyperparams: signal_variance must be > 0");
    detail::require(lengthscales.size() > 0, "KernelHyperparams: empty lengthscales");
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      detail::require(std::isfinite(lengthscales[i]) && lengthscales[i] > 0.0,
                      "KernelHyperparams: every lengthscale must be > 0");
    detail::require(std::isfinite(noise_variance) && noise_variance >= 0.0,
                    "KernelHyperparams: noise_variance must be >= 0");
  }
};

template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
struct BasicValueGrad {
  T value = T(0);
  VectorT<T> grad;
};
using ValueGrad = BasicValueGrad<double>;

// Squared Mahalanobis distance under diagonal Θ.
inline double scaled_sqdist(const Vector& x1, const Vector& x2, const Vector& theta) {
  return ((x1 - x2).array().square() / theta.array()).sum();
}

inline double rbf_kernel(const Vector& x1, const Vector& x2, const KernelHyperparams& hyper) {
  detail::require_dim(x1.size(), hyper.dim(), "rbf_kernel(x1)");
  detail::require_dim(x2.size(), hyper.dim(), "rbf_kernel(x2)");
  return hyper.signal_variance * std::exp(-0.5 * scaled_sqdist(x1, x2, hyper.lengthscales));
}

// Gradient with respect to x1.
inline ValueGrad rbf_kernel_grad(const Vector& x1, const Vector& x2,
                                 const KernelHyperparams& hyper) {
  const double k = rbf_kernel(x1, x2, hyper);
  return {k, -k * ((x1 - x2).array() / hyper.lengthscales.array()).matrix()};
}

// k(X, x) for every row of X.
inline Vector rbf_kernel_column(const Matrix& X, const Vector& x, const KernelHyperparams& hyper) {
  detail::require_dim(x.size(), hyper.dim(), "rbf_kernel_column");
  const Eigen::ArrayXd inv_theta = hyper.lengthscales.array().inverse();
  Vector k(X.rows());
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    const double r2 = ((X.row(j).transpose() - x).array().square() * inv_theta).sum();
    k[j] = hyper.signal_variance * std::exp(-0.5 * r2);
  }
  return k;
}

inline Matrix rbf_kernel_matrix(const Matrix& X, const KernelHyperparams& hyper) {
  const Eigen::Index n = X.rows();
  const Eigen::ArrayXd inv_theta = hyper.lengthscales.array().inverse();
  Matrix K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    K(a, a) = hyper.signal_variance;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double r2 = ((X.row(a) - X.row(b)).array().square() * inv_theta.transpose()).sum();
      K(a, b) = K(b, a) = hyper.signal_variance * std::exp(-0.5 * r2);
    }
  }
  return K;
}

// ∫ k(x1, x) k(x, x2) dx over ℝᵈ for fixed hyperparameters, with the
// gradient in x1:  σ_f² π^{d/2} |Θ|^{1/2} k(x1, x2; 2Θ).
template <class T>
class BasicKhat {
 public:
  explicit BasicKhat(const KernelHyperparams& hyper) : theta_(hyper.lengthscales.cast<T>()) {
    using std::pow, std::sqrt;
    const T sf2 = hyper.signal_variance;
    scale_ = sf2 * sf2 * pow(T(kPi), T(0.5) * T(hyper.dim())) * sqrt(theta_.prod());
  }

  BasicValueGrad<T> operator()(const VectorT<T>& x1, const VectorT<T>& x2) const {
    const T v = value(x1, x2);
    return {v, -v * ((x1 - x2).array() / (T(2) * theta_.array())).matrix()};
  }

  T value(const VectorT<T>& x1, const VectorT<T>& x2) const {
    using std::exp;
    return scale_ * exp(T(-0.25) * ((x1 - x2).array().square() / theta_.array()).sum());
  }

 private:
  VectorT<T> theta_;
  T scale_;
};

inline ValueGrad khat(const Vector& x1, const Vector& x2, const KernelHyperparams& hyper) {
  detail::require_dim(x1.size(), hyper.dim(), "khat(x1)");
  detail::require_dim(x2.size(), hyper.dim(), "khat(x2)");
  return BasicKhat<double>(hyper)(x1, x2);
}

// One Gaussian weighting component N(·; mean, cov).
struct GaussianComponent {
  Vector mean;
  Matrix cov;
};

// ∫ k(x1, x) k(x, x2) N(x; ω, Σ) dx for a fixed (Θ, ω, Σ). The factorization
// of Θ + 2Σ is cached so repeated evaluation over a dataset stays cheap.
//
//   value = σ_f⁴ |2ΣΘ⁻¹ + I|^{-1/2} exp(-Δᵀ(4Θ)⁻¹Δ) exp(-(m-ω)ᵀ(Θ+2Σ)⁻¹(m-ω))
//   with Δ = x1 - x2, m = (x1 + x2)/2.
template <class T>
class BasicWeightedKhat {
 public:
  BasicWeightedKhat(const KernelHyperparams& hyper, const GaussianComponent& comp)
      : theta_(hyper.lengthscales.cast<T>()), mean_(comp.mean.cast<T>()) {
    using std::exp, std::log;
    const Eigen::Index d = theta_.size();
    detail::require_dim(comp.mean.size(), d, "WeightedKhat(mean)");
    detail::require(comp.cov.rows() == d && comp.cov.cols() == d,
                    "WeightedKhat: covariance must be d x d");
    detail::require((comp.cov - comp.cov.transpose()).cwiseAbs().maxCoeff() <=
                        1e-10 * (1.0 + comp.cov.cwiseAbs().maxCoeff()),
                    "WeightedKhat: covariance must be symmetric");
    Eigen::LLT<Matrix> sigma_llt(comp.cov);
    detail::require(sigma_llt.info() == Eigen::Success,
                    "WeightedKhat: covariance must be positive definite");
    MatrixT<T> S = theta_.asDiagonal();
    S += T(2) * comp.cov.cast<T>();
    llt_.compute(S);
    detail::require(llt_.info() == Eigen::Success, "WeightedKhat: Θ + 2Σ not SPD");
    const MatrixT<T> L = llt_.matrixL();
    // |2ΣΘ⁻¹ + I| = |Θ + 2Σ| / |Θ|
    const T logdet = T(2) * L.diagonal().array().log().sum() - theta_.array().log().sum();
    const T sf2 = hyper.signal_variance;
    scale_ = sf2 * sf2 * exp(T(-0.5) * logdet);
  }

  BasicValueGrad<T> operator()(const VectorT<T>& x1, const VectorT<T>& x2) const {
    using std::exp;
    const VectorT<T> delta = x1 - x2;
    const VectorT<T> m = T(0.5) * (x1 + x2) - mean_;
    const VectorT<T> sm = llt_.solve(m);
    const T v = scale_ * exp(T(-0.25) * (delta.array().square() / theta_.array()).sum() - m.dot(sm));
    const VectorT<T> g = -(delta.array() / (T(2) * theta_.array())).matrix() - sm;
    return {v, v * g};
  }

  T value(const VectorT<T>& x1, const VectorT<T>& x2) const {
    using std::exp;
    const VectorT<T> m = T(0.5) * (x1 + x2) - mean_;
    return scale_ * exp(T(-0.25) * ((x1 - x2).array().square() / theta_.array()).sum() -
                        m.dot(llt_.solve(m)));
  }

  // Rows L⁻¹(X_j − ω) with L the Cholesky factor of Θ + 2Σ.
  MatrixT<T> whiten(const MatrixT<T>& X) const {
    MatrixT<T> centered = X.transpose();
    centered.colwise() -= mean_;
    return llt_.matrixL().solve(centered).transpose();
  }

  // Adds alpha·value(x, X_j) to out[j] for every row, and the gradients in
  // x to the rows of *grad when given. `whitened` comes from whiten(X).
  void accumulate(const VectorT<T>& x, const MatrixT<T>& X, const MatrixT<T>& whitened, T alpha,
                  VectorT<T>& out, MatrixT<T>* grad) const {
    using std::exp;
    const Eigen::Index n = X.rows(), d = x.size();
    const VectorT<T> y = llt_.matrixL().solve(VectorT<T>(x - mean_));
    const Eigen::Array<T, Eigen::Dynamic, 1> inv_theta = theta_.array().inverse();
    MatrixT<T> pull;
    if (grad) pull.resize(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Array<T, Eigen::Dynamic, 1> delta = x.array() - X.row(j).transpose().array();
      const VectorT<T> mz = T(0.5) * (y + whitened.row(j).transpose());
      const T v = alpha * scale_ * exp(T(-0.25) * (delta.square() * inv_theta).sum() - mz.squaredNorm());
      out[j] += v;
      if (grad) {
        grad->row(j) -= (T(0.5) * v * delta * inv_theta).matrix().transpose();
        pull.col(j) = v * mz;
      }
    }
    // ∂/∂x of −(m−ω)ᵀ(Θ+2Σ)⁻¹(m−ω) is −L⁻ᵀ L⁻¹(m−ω).
    if (grad) *grad -= llt_.matrixU().solve(pull).transpose();
  }

 private:
  VectorT<T> theta_;
  VectorT<T> mean_;
  Eigen::LLT<MatrixT<T>> llt_;
  T scale_ = T(0);
};

using WeightedKhat = BasicWeightedKhat<double>;

inline ValueGrad khat_gmm(const Vector& x1, const Vector& x2, const KernelHyperparams& hyper,
                          const GaussianComponent& comp) {
  detail::require_dim(x1.size(), hyper.dim(), "khat_gmm(x1)");
  detail::require_dim(x2.size(), hyper.dim(), "khat_gmm(x2)");
  return WeightedKhat(hyper, comp)(x1, x2);
}

}  // namespace owsample
