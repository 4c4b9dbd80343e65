#pragma once

// Exact Gaussian-process regression with an RBF-ARD kernel: factorization
// with a jitter fallback, posterior queries and maximum-likelihood training.

#include "owsample/core.hpp"
#include "owsample/detail/bfgs.hpp"
#include "owsample/kernel.hpp"

#include <optional>
#include <vector>

namespace owsample {

struct Dataset {
  Matrix inputs;   // n x d
  Vector outputs;  // n

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  void validate() const {
    detail::require(inputs.rows() >= 1, "Dataset: need at least one point");
    detail::require(inputs.rows() == outputs.size(),
                    "Dataset: input rows must equal output length");
    detail::require(inputs.allFinite(), "Dataset: inputs must be finite");
    detail::require(outputs.allFinite(), "Dataset: outputs must be finite");
  }

  void append(const Vector& x, double y) {
    const Eigen::Index n = inputs.rows();
    if (n == 0) inputs.resize(0, x.size());
    inputs.conservativeResize(n + 1, Eigen::NoChange);
    inputs.row(n) = x.transpose();
    outputs.conservativeResize(n + 1);
    outputs[n] = y;
  }
};

enum class PriorMeanMode { zero, data_mean, fixed };

struct PriorMeanSpec {
  PriorMeanMode mode = PriorMeanMode::data_mean;
  double value = 0.0;

  static PriorMeanSpec zero() { return {PriorMeanMode::zero, 0.0}; }
  static PriorMeanSpec data_mean() { return {PriorMeanMode::data_mean, 0.0}; }
  static PriorMeanSpec fixed(double v) { return {PriorMeanMode::fixed, v}; }

  double resolve(const Vector& y) const {
    switch (mode) {
      case PriorMeanMode::zero: return 0.0;
      case PriorMeanMode::data_mean: return y.mean();
      case PriorMeanMode::fixed: return value;
    }
    return 0.0;
  }
};

struct NoiseSpec {
  bool trained = true;
  double value = 0.0;

  static NoiseSpec fixed(double v) { return {false, v}; }
  static NoiseSpec learned() { return {true, 0.0}; }
};

namespace detail {

struct JitteredCholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Jitter ladder: 1e-10 σ_f², x10 per failure, up to 1e-4 σ_f².
inline JitteredCholesky factorize_with_jitter(const Matrix& K, double signal_variance) {
  JitteredCholesky out;
  out.llt.compute(K);
  if (out.llt.info() == Eigen::Success) return out;
  for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    const double j = rel * signal_variance;
    Matrix Kj = K;
    Kj.diagonal().array() += j;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = j;
      return out;
    }
  }
  throw FactorizationError("GP covariance not positive definite after maximum jitter");
}

}  // namespace detail

class GPModel {
 public:
  GPModel(Dataset data, KernelHyperparams hyper, double prior_mean)
      : data_(std::move(data)), hyper_(std::move(hyper)), prior_mean_(prior_mean) {
    data_.validate();
    hyper_.validate();
    detail::require_dim(data_.dim(), hyper_.dim(), "GPModel");
    Matrix K = rbf_kernel_matrix(data_.inputs, hyper_);
    K.diagonal().array() += hyper_.noise_variance;
    auto chol = detail::factorize_with_jitter(K, hyper_.signal_variance);
    llt_ = std::move(chol.llt);
    jitter_ = chol.jitter;
    K.diagonal().array() += jitter_;
    weights_extended_ = refined_solve(K, (data_.outputs.array() - prior_mean_).matrix());
    weights_ = weights_extended_.cast<double>();
  }

  const Dataset& data() const { return data_; }
  const KernelHyperparams& hyper() const { return hyper_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }
  const Vector& weights() const { return weights_; }
  Matrix chol_factor() const { return llt_.matrixL(); }
  Eigen::Index dim() const { return data_.dim(); }
  Eigen::Index size() const { return data_.size(); }

  Vector kernel_column(const Vector& x) const {
    return rbf_kernel_column(data_.inputs, x, hyper_);
  }
  // K⁻¹ v
  Vector solve(const Vector& v) const { return llt_.solve(v); }
  Matrix solve(const Matrix& v) const { return llt_.solve(v); }
  // A⁻¹ v with K = A Aᵀ
  Vector solve_lower(const Vector& v) const { return llt_.matrixL().solve(v); }

  double posterior_mean(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "posterior_mean");
    const Vector k = kernel_column(x);
    long double acc = 0.0L;
    for (Eigen::Index j = 0; j < k.size(); ++j) acc += static_cast<long double>(k[j]) * weights_extended_[j];
    return prior_mean_ + static_cast<double>(acc);
  }

  double posterior_var(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "posterior_var");
    const Vector v = solve_lower(kernel_column(x));
    return std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  }

  double posterior_cov(const Vector& x, const Vector& x2) const {
    detail::require_dim(x.size(), dim(), "posterior_cov(x)");
    detail::require_dim(x2.size(), dim(), "posterior_cov(x2)");
    if (x == x2) return posterior_var(x);
    const Vector v1 = solve_lower(kernel_column(x));
    const Vector v2 = solve_lower(kernel_column(x2));
    return rbf_kernel(x, x2, hyper_) - v1.dot(v2);
  }

  // ∂k(x, X_j)/∂x stacked as rows (n x d).
  Matrix kernel_column_jacobian(const Vector& x, const Vector& kcol) const {
    Matrix J(size(), dim());
    const Eigen::ArrayXd inv_theta = hyper_.lengthscales.array().inverse();
    for (Eigen::Index j = 0; j < size(); ++j)
      J.row(j) = (-kcol[j] * (x - data_.inputs.row(j).transpose()).array() * inv_theta)
                     .matrix()
                     .transpose();
    return J;
  }

  Vector posterior_mean_grad(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "posterior_mean_grad");
    const Vector k = kernel_column(x);
    return kernel_column_jacobian(x, k).transpose() * weights_;
  }

  ValueGrad posterior_var_grad(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "posterior_var_grad");
    const Vector k = kernel_column(x);
    const Vector kinv_k = solve(k);
    const double var = hyper_.signal_variance - k.dot(kinv_k);
    const Vector g = -2.0 * kernel_column_jacobian(x, k).transpose() * kinv_k;
    if (var <= 0.0) return {0.0, Vector::Zero(dim())};
    return {var, g};
  }

  // μ at every row of Xs, evaluated in blocks through one GEMM per block.
  Vector posterior_mean_batch(const Matrix& Xs) const {
    detail::require_dim(Xs.cols(), dim(), "posterior_mean_batch");
    const Eigen::ArrayXd inv_sqrt = hyper_.lengthscales.array().sqrt().inverse();
    const Matrix Xd = data_.inputs * inv_sqrt.matrix().asDiagonal();
    const Eigen::ArrayXd xd_sq = Xd.rowwise().squaredNorm().array();
    Vector out(Xs.rows());
    constexpr Eigen::Index kBlock = 2048;
    for (Eigen::Index start = 0; start < Xs.rows(); start += kBlock) {
      const Eigen::Index len = std::min(kBlock, Xs.rows() - start);
      const Matrix B = Xs.middleRows(start, len) * inv_sqrt.matrix().asDiagonal();
      Eigen::ArrayXXd r2 = (-2.0 * B * Xd.transpose()).array();
      r2.colwise() += B.rowwise().squaredNorm().array();
      r2.rowwise() += xd_sq.transpose();
      const Matrix Ks = (hyper_.signal_variance * (-0.5 * r2.max(0.0)).exp()).matrix();
      out.segment(start, len) = (Ks * weights_).array() + prior_mean_;
    }
    return out;
  }

 private:
  Dataset data_;
  KernelHyperparams hyper_;
  double prior_mean_ = 0.0;
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;

  // K⁻¹b with mixed-precision iterative refinement: residuals and the
  // solution accumulate in long double, corrections reuse the double
  // factorization. The weights of a nearly singular K then still reproduce
  // the training outputs.
  VectorT<long double> refined_solve(const Matrix& K, const Vector& b) const {
    VectorT<long double> w = llt_.solve(b).cast<long double>();
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 30; ++it) {
      Vector r(b.size());
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        long double acc = b[i];
        for (Eigen::Index j = 0; j < b.size(); ++j) acc -= static_cast<long double>(K(i, j)) * w[j];
        r[i] = static_cast<double>(acc);
      }
      const double norm = r.norm();
      if (!(norm < 0.5 * last)) break;
      last = norm;
      w += llt_.solve(r).cast<long double>();
    }
    return w;
  }
  Vector weights_;
  VectorT<long double> weights_extended_;
};

// Log evidence and its gradient with respect to the log-hyperparameters,
// ordered [log σ_f², log Θ_1 .. log Θ_d, log σ_ε²].
struct LogMarginalLikelihood {
  double value = 0.0;
  Vector grad;
};

namespace detail {

// Per-dimension squared differences, reused across every evaluation of one fit.
inline std::vector<Matrix> pairwise_sqdiff(const Matrix& X) {
  std::vector<Matrix> D(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const Vector c = X.col(i);
    Matrix Di(X.rows(), X.rows());
    for (Eigen::Index a = 0; a < X.rows(); ++a)
      for (Eigen::Index b = 0; b < X.rows(); ++b) Di(a, b) = (c[a] - c[b]) * (c[a] - c[b]);
    D[static_cast<std::size_t>(i)] = std::move(Di);
  }
  return D;
}

inline LogMarginalLikelihood lml_impl(const KernelHyperparams& hyper, const Dataset& data,
                                      double prior_mean, const std::vector<Matrix>& D) {
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();
  Matrix S = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < d; ++i) S += D[static_cast<std::size_t>(i)] / hyper.lengthscales[i];
  const Matrix Kf = (hyper.signal_variance * (-0.5 * S.array()).exp()).matrix();
  Matrix K = Kf;
  K.diagonal().array() += hyper.noise_variance;
  auto chol = factorize_with_jitter(K, hyper.signal_variance);
  const Vector r = (data.outputs.array() - prior_mean).matrix();
  const Vector alpha = chol.llt.solve(r);
  const Matrix L = chol.llt.matrixL();
  LogMarginalLikelihood out;
  out.value = -0.5 * r.dot(alpha) - L.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * kLog2Pi;
  const Matrix Kinv = chol.llt.solve(Matrix::Identity(n, n));
  const Matrix Q = alpha * alpha.transpose() - Kinv;
  const Matrix QK = Q.cwiseProduct(Kf);
  out.grad.resize(d + 2);
  out.grad[0] = 0.5 * QK.sum();
  for (Eigen::Index i = 0; i < d; ++i)
    out.grad[1 + i] = 0.25 * QK.cwiseProduct(D[static_cast<std::size_t>(i)]).sum() /
                      hyper.lengthscales[i];
  out.grad[d + 1] = 0.5 * hyper.noise_variance * Q.trace();
  return out;
}

}  // namespace detail

inline LogMarginalLikelihood log_marginal_likelihood(const KernelHyperparams& hyper,
                                                     const Dataset& data, double prior_mean) {
  data.validate();
  hyper.validate();
  detail::require_dim(data.dim(), hyper.dim(), "log_marginal_likelihood");
  return detail::lml_impl(hyper, data, prior_mean, detail::pairwise_sqdiff(data.inputs));
}

struct FitOptions {
  PriorMeanSpec prior_mean = PriorMeanSpec::data_mean();
  NoiseSpec noise = NoiseSpec::learned();
  bool train = true;                        // false: use `initial` as-is
  int n_starts = 8;
  std::optional<KernelHyperparams> initial;  // warm start, or the fixed hypers
  std::uint64_t seed = 0;
  detail::BfgsOptions bfgs{};
};

// Default starting point: lengthscale range/4 per dimension, signal variance
// the output variance, noise 1e-4 of the output variance.
inline KernelHyperparams heuristic_hyperparams(const Dataset& data) {
  KernelHyperparams h;
  const Eigen::Index d = data.dim();
  h.lengthscales.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double range = data.inputs.col(i).maxCoeff() - data.inputs.col(i).minCoeff();
    const double ell = range > 0.0 ? range / 4.0 : 1.0;
    h.lengthscales[i] = ell * ell;
  }
  double vy = 0.0;
  if (data.size() > 1) {
    const double m = data.outputs.mean();
    vy = (data.outputs.array() - m).square().sum() / static_cast<double>(data.size() - 1);
  }
  if (!(vy > 0.0) || !std::isfinite(vy)) vy = 1.0;
  h.signal_variance = vy;
  h.noise_variance = 1e-4 * vy;
  return h;
}

inline GPModel fit_gp(const Dataset& data, const FitOptions& opt = {}) {
  data.validate();
  const double m0 = opt.prior_mean.resolve(data.outputs);
  if (!opt.train) {
    detail::require(opt.initial.has_value(), "fit_gp: fixed hyperparameters required when train=false");
    KernelHyperparams h = *opt.initial;
    if (!opt.noise.trained) h.noise_variance = opt.noise.value;
    return GPModel(data, h, m0);
  }
  detail::require(data.size() >= 2, "fit_gp: training needs at least two points");

  const Eigen::Index d = data.dim();
  const bool train_noise = opt.noise.trained;
  if (!train_noise) detail::require(opt.noise.value >= 0.0, "fit_gp: fixed noise must be >= 0");
  const KernelHyperparams heur = heuristic_hyperparams(data);
  const double vy = heur.signal_variance;
  const Eigen::Index np = d + 1 + (train_noise ? 1 : 0);

  Vector center(np), lo(np), hi(np);
  center[0] = std::log(heur.signal_variance);
  lo[0] = center[0] + std::log(1e-4);
  hi[0] = center[0] + std::log(1e4);
  for (Eigen::Index i = 0; i < d; ++i) {
    center[1 + i] = std::log(heur.lengthscales[i]);
    lo[1 + i] = center[1 + i] + std::log(1e-4);
    hi[1 + i] = center[1 + i] + std::log(1e4);
  }
  if (train_noise) {
    center[np - 1] = std::log(heur.noise_variance);
    lo[np - 1] = std::log(1e-8 * vy);
    hi[np - 1] = std::log(vy);
  }

  auto unpack = [&](const Vector& p) {
    KernelHyperparams h;
    h.signal_variance = std::exp(p[0]);
    h.lengthscales = p.segment(1, d).array().exp().matrix();
    h.noise_variance = train_noise ? std::exp(p[np - 1]) : opt.noise.value;
    return h;
  };
  auto pack = [&](const KernelHyperparams& h) {
    Vector p(np);
    p[0] = std::log(h.signal_variance);
    p.segment(1, d) = h.lengthscales.array().log().matrix();
    if (train_noise) p[np - 1] = std::log(std::max(h.noise_variance, 1e-300));
    return Vector(p.cwiseMax(lo).cwiseMin(hi));
  };

  const auto D = detail::pairwise_sqdiff(data.inputs);
  detail::ObjectiveWithGrad neg_lml = [&](const Vector& p, Vector& g) -> double {
    try {
      const auto r = detail::lml_impl(unpack(p), data, m0, D);
      if (!std::isfinite(r.value)) return std::numeric_limits<double>::infinity();
      g = -r.grad.head(np);
      return -r.value;
    } catch (const FactorizationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Vector> starts;
  if (opt.initial && opt.initial->dim() == d)
    starts.push_back(pack(*opt.initial));
  else
    starts.push_back(center);
  Rng rng = make_rng(opt.seed, 0x6770);
  while (static_cast<int>(starts.size()) < std::max(1, opt.n_starts)) {
    Vector p(np);
    for (Eigen::Index i = 0; i < np; ++i)
      p[i] = center[i] + std::log(1e-3) + uniform01(rng) * (std::log(1e3) - std::log(1e-3));
    starts.push_back(Vector(p.cwiseMax(lo).cwiseMin(hi)));
  }

  detail::BfgsResult best;
  for (const auto& s : starts) {
    auto r = detail::minimize_box_bfgs(neg_lml, s, lo, hi, opt.bfgs);
    if (std::isfinite(r.value) && r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value))
    throw TrainingError("fit_gp: every optimizer start failed", best.value);
  return GPModel(data, unpack(best.x), m0);
}

}  // namespace owsample
