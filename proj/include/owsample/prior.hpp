#pragma once

// Nominal input distributions p_x: a joint Gaussian, or a product of
// one-dimensional marginals (normal, uniform, lognormal) each optionally
// expressed in affinely rescaled coordinates.

#include "owsample/core.hpp"
#include "owsample/kernel.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace owsample {

struct NormalMarginal {
  double mean = 0.0;
  double sd = 1.0;
};

struct UniformMarginal {
  double lo = 0.0;
  double hi = 1.0;
};

// ln X ~ N(log_mean, log_sd²)
struct LogNormalMarginal {
  double log_mean = 0.0;
  double log_sd = 1.0;
};

// A marginal over a physical variable p = offset + scale·u, reported as a
// density over the search coordinate u.
struct Marginal {
  std::variant<NormalMarginal, UniformMarginal, LogNormalMarginal> dist;
  double offset = 0.0;
  double scale = 1.0;
};

namespace detail {

struct MarginalEval {
  double pdf = 0.0;
  double dpdf = 0.0;  // derivative in the physical variable
};

inline MarginalEval eval_physical(const NormalMarginal& m, double p) {
  const double z = (p - m.mean) / m.sd;
  const double v = std::exp(-0.5 * z * z) / (m.sd * std::sqrt(2.0 * kPi));
  return {v, -v * z / m.sd};
}

inline MarginalEval eval_physical(const UniformMarginal& m, double p) {
  if (p < m.lo || p > m.hi) return {0.0, 0.0};
  return {1.0 / (m.hi - m.lo), 0.0};
}

inline MarginalEval eval_physical(const LogNormalMarginal& m, double p) {
  if (p <= 0.0) return {0.0, 0.0};
  const double z = (std::log(p) - m.log_mean) / m.log_sd;
  const double v = std::exp(-0.5 * z * z) / (p * m.log_sd * std::sqrt(2.0 * kPi));
  return {v, -v * (1.0 + z / m.log_sd) / p};
}

inline double sample_physical(const NormalMarginal& m, Rng& rng) {
  return m.mean + m.sd * standard_normal(rng);
}
inline double sample_physical(const UniformMarginal& m, Rng& rng) {
  return m.lo + (m.hi - m.lo) * uniform01(rng);
}
inline double sample_physical(const LogNormalMarginal& m, Rng& rng) {
  return std::exp(m.log_mean + m.log_sd * standard_normal(rng));
}

inline std::pair<double, double> moments_physical(const NormalMarginal& m) {
  return {m.mean, m.sd * m.sd};
}
inline std::pair<double, double> moments_physical(const UniformMarginal& m) {
  const double w = m.hi - m.lo;
  return {0.5 * (m.lo + m.hi), w * w / 12.0};
}
inline std::pair<double, double> moments_physical(const LogNormalMarginal& m) {
  const double s2 = m.log_sd * m.log_sd;
  const double mean = std::exp(m.log_mean + 0.5 * s2);
  return {mean, (std::exp(s2) - 1.0) * mean * mean};
}

}  // namespace detail

class InputPrior {
 public:
  static InputPrior gaussian(Vector mean, Matrix cov) {
    detail::require(mean.size() > 0, "InputPrior: empty mean");
    detail::require(cov.rows() == mean.size() && cov.cols() == mean.size(),
                    "InputPrior: covariance must be d x d");
    InputPrior p;
    p.gauss_ = GaussianComponent{std::move(mean), std::move(cov)};
    p.llt_.compute(p.gauss_->cov);
    detail::require(p.llt_.info() == Eigen::Success,
                    "InputPrior: covariance must be positive definite");
    const Matrix L = p.llt_.matrixL();
    p.log_norm_ = -0.5 * static_cast<double>(p.dim()) * kLog2Pi -
                  L.diagonal().array().log().sum();
    const Matrix& C = p.gauss_->cov;
    p.independent_ = (C - Matrix(C.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    return p;
  }

  static InputPrior standard_normal(Eigen::Index d) {
    return gaussian(Vector::Zero(d), Matrix::Identity(d, d));
  }

  static InputPrior product(std::vector<Marginal> marginals) {
    detail::require(!marginals.empty(), "InputPrior: no marginals");
    for (const auto& m : marginals) {
      detail::require(m.scale > 0.0 && std::isfinite(m.offset), "InputPrior: bad affine map");
      std::visit(
          [](const auto& dm) {
            using T = std::decay_t<decltype(dm)>;
            if constexpr (std::is_same_v<T, NormalMarginal>)
              detail::require(dm.sd > 0.0, "InputPrior: normal sd must be > 0");
            else if constexpr (std::is_same_v<T, UniformMarginal>)
              detail::require(dm.lo < dm.hi, "InputPrior: uniform lo < hi required");
            else
              detail::require(dm.log_sd > 0.0, "InputPrior: lognormal log_sd must be > 0");
          },
          m.dist);
    }
    InputPrior p;
    p.marginals_ = std::move(marginals);
    return p;
  }

  Eigen::Index dim() const {
    return gauss_ ? gauss_->mean.size() : static_cast<Eigen::Index>(marginals_.size());
  }

  bool is_gaussian() const { return gauss_.has_value(); }

  const GaussianComponent& as_gaussian() const {
    if (!gauss_) throw std::logic_error("InputPrior: not a joint Gaussian");
    return *gauss_;
  }

  const std::vector<Marginal>& marginals() const { return marginals_; }

  double pdf(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "InputPrior::pdf");
    if (gauss_) return std::exp(log_gauss(x));
    double v = 1.0;
    for (std::size_t i = 0; i < marginals_.size(); ++i)
      v *= eval_marginal(i, x[static_cast<Eigen::Index>(i)]).pdf;
    return v;
  }

  Vector pdf_grad(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "InputPrior::pdf_grad");
    if (gauss_) {
      const double v = std::exp(log_gauss(x));
      return -v * llt_.solve(x - gauss_->mean);
    }
    const auto n = marginals_.size();
    std::vector<detail::MarginalEval> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = eval_marginal(i, x[static_cast<Eigen::Index>(i)]);
    Vector g(dim());
    for (std::size_t i = 0; i < n; ++i) {
      double prod = e[i].dpdf;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) prod *= e[j].pdf;
      g[static_cast<Eigen::Index>(i)] = prod;
    }
    return g;
  }

  Vector sample(Rng& rng) const {
    if (gauss_ && !independent()) {
      Vector z(dim());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = owsample::standard_normal(rng);
      return gauss_->mean + llt_.matrixL() * z;
    }
    Vector x(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) x[i] = sample_coordinate(i, rng);
    return x;
  }

  // Independent coordinates: product of marginals or a diagonal Gaussian.
  bool independent() const { return independent_; }

  // Rejection sampling restricted to the search box, coordinate by
  // coordinate when the coordinates are independent.
  Vector sample_in_box(const BoxBounds& box, Rng& rng, int max_tries = 100000) const {
    detail::require_dim(box.dim(), dim(), "InputPrior::sample_in_box");
    if (independent()) {
      Vector x(dim());
      for (Eigen::Index i = 0; i < dim(); ++i) {
        int t = 0;
        do {
          if (++t > max_tries)
            throw Error("InputPrior: box holds too little prior mass for rejection sampling");
          x[i] = sample_coordinate(i, rng);
        } while (x[i] < box.lo[i] || x[i] > box.hi[i]);
      }
      return x;
    }
    for (int t = 0; t < max_tries; ++t) {
      Vector x = sample(rng);
      if (box.contains(x)) return x;
    }
    throw Error("InputPrior: box holds too little prior mass for rejection sampling");
  }

  Matrix sample_matrix(Eigen::Index n, Rng& rng, const BoxBounds* box = nullptr) const {
    Matrix X(n, dim());
    for (Eigen::Index k = 0; k < n; ++k)
      X.row(k) = (box ? sample_in_box(*box, rng) : sample(rng)).transpose();
    return X;
  }

  Vector mean() const {
    if (gauss_) return gauss_->mean;
    Vector m(dim());
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
      const auto& mg = marginals_[i];
      const auto mv = std::visit([](const auto& dm) { return detail::moments_physical(dm); }, mg.dist);
      m[static_cast<Eigen::Index>(i)] = (mv.first - mg.offset) / mg.scale;
    }
    return m;
  }

  Vector stddev() const {
    if (gauss_) return gauss_->cov.diagonal().cwiseSqrt();
    Vector s(dim());
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
      const auto& mg = marginals_[i];
      const auto mv = std::visit([](const auto& dm) { return detail::moments_physical(dm); }, mg.dist);
      s[static_cast<Eigen::Index>(i)] = std::sqrt(mv.second) / mg.scale;
    }
    return s;
  }

 private:
  InputPrior() = default;

  double log_gauss(const Vector& x) const {
    const Vector z = llt_.matrixL().solve(x - gauss_->mean);
    return log_norm_ - 0.5 * z.squaredNorm();
  }

  // Only valid for independent coordinates.
  double sample_coordinate(Eigen::Index i, Rng& rng) const {
    if (gauss_)
      return gauss_->mean[i] + std::sqrt(gauss_->cov(i, i)) * owsample::standard_normal(rng);
    const auto& m = marginals_[static_cast<std::size_t>(i)];
    const double p =
        std::visit([&](const auto& dm) { return detail::sample_physical(dm, rng); }, m.dist);
    return (p - m.offset) / m.scale;
  }

  detail::MarginalEval eval_marginal(std::size_t i, double u) const {
    const auto& m = marginals_[i];
    const double p = m.offset + m.scale * u;
    auto e = std::visit([&](const auto& dm) { return detail::eval_physical(dm, p); }, m.dist);
    return {m.scale * e.pdf, m.scale * m.scale * e.dpdf};
  }

  std::optional<GaussianComponent> gauss_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_ = 0.0;
  bool independent_ = true;
  std::vector<Marginal> marginals_;
};

}  // namespace owsample
