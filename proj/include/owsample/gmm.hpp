#pragma once

// Unnormalized Gaussian mixtures  g(x) = Σ α_i N(x; ω_i, Σ_i)  and a weighted
// EM fit with full covariances. The α_i carry the total mass of whatever
// nonnegative function the mixture approximates, so they need not sum to 1.

#include "owsample/core.hpp"
#include "owsample/kernel.hpp"

#include <optional>
#include <vector>

namespace owsample {

class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(Vector alpha, std::vector<GaussianComponent> components)
      : alpha_(std::move(alpha)), comps_(std::move(components)) {
    detail::require(!comps_.empty(), "GaussianMixture: no components");
    detail::require(alpha_.size() == static_cast<Eigen::Index>(comps_.size()),
                    "GaussianMixture: one weight per component required");
    const Eigen::Index d = comps_.front().mean.size();
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const auto& c = comps_[i];
      detail::require(alpha_[static_cast<Eigen::Index>(i)] > 0.0,
                      "GaussianMixture: weights must be > 0");
      detail::require_dim(c.mean.size(), d, "GaussianMixture(mean)");
      detail::require(c.cov.rows() == d && c.cov.cols() == d, "GaussianMixture: cov must be d x d");
      Eigen::LLT<Matrix> llt(c.cov);
      detail::require(llt.info() == Eigen::Success, "GaussianMixture: covariance must be SPD");
      const Matrix L = llt.matrixL();
      log_norm_.push_back(-0.5 * static_cast<double>(d) * kLog2Pi -
                          L.diagonal().array().log().sum());
      llts_.push_back(std::move(llt));
    }
  }

  std::size_t size() const { return comps_.size(); }
  Eigen::Index dim() const { return comps_.empty() ? 0 : comps_.front().mean.size(); }
  const Vector& alpha() const { return alpha_; }
  const std::vector<GaussianComponent>& components() const { return comps_; }
  double total_mass() const { return alpha_.sum(); }

  double component_pdf(std::size_t i, const Vector& x) const {
    const Vector z = llts_[i].matrixL().solve(x - comps_[i].mean);
    return std::exp(log_norm_[i] - 0.5 * z.squaredNorm());
  }

  double operator()(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "GaussianMixture");
    double s = 0.0;
    for (std::size_t i = 0; i < comps_.size(); ++i)
      s += alpha_[static_cast<Eigen::Index>(i)] * component_pdf(i, x);
    return s;
  }

  Vector grad(const Vector& x) const {
    detail::require_dim(x.size(), dim(), "GaussianMixture::grad");
    Vector g = Vector::Zero(dim());
    for (std::size_t i = 0; i < comps_.size(); ++i)
      g -= alpha_[static_cast<Eigen::Index>(i)] * component_pdf(i, x) *
           llts_[i].solve(x - comps_[i].mean);
    return g;
  }

 private:
  Vector alpha_;
  std::vector<GaussianComponent> comps_;
  std::vector<Eigen::LLT<Matrix>> llts_;
  std::vector<double> log_norm_;
};

struct GmmFitOptions {
  int n_components = 2;
  int max_iter = 200;
  double tol = 1e-6;             // relative change of the weighted log-likelihood
  double reg_covar = -1.0;       // < 0: 1e-6 x mean per-dimension variance
  int max_reinit = 3;
  bool select_by_bic = false;    // try 1..n_components and keep the lowest BIC
  std::optional<GaussianMixture> initial;
};

struct GmmFitResult {
  GaussianMixture mixture;
  std::vector<double> loglik_history;  // weighted mean log-likelihood per EM step
  int iterations = 0;
  bool converged = false;
  int dropped = 0;
};

namespace detail {

struct EmState {
  Vector pi;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
};

inline double logsumexp(const Eigen::ArrayXd& a) {
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a - m).exp().sum());
}

inline Eigen::Index draw_weighted(const Vector& w, Rng& rng) {
  const double total = w.sum();
  double u = uniform01(rng) * total;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    u -= w[k];
    if (u < 0.0) return k;
  }
  return w.size() - 1;
}

inline Matrix weighted_cov(const Matrix& X, const Vector& w, const Vector& mean) {
  const Matrix C = X.rowwise() - mean.transpose();
  return (C.transpose() * w.asDiagonal() * C) / w.sum();
}

// Per-sample log N(x_k; mean, cov) for every row. Returns false if cov is not SPD.
inline bool log_gauss_rows(const Matrix& X, const Vector& mean, const Matrix& cov,
                           Eigen::Ref<Eigen::ArrayXd> out) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) return false;
  const Matrix L = llt.matrixL();
  if (!(L.diagonal().array() > 0.0).all()) return false;
  const double log_norm =
      -0.5 * static_cast<double>(X.cols()) * kLog2Pi - L.diagonal().array().log().sum();
  const Matrix Z = llt.matrixL().solve((X.rowwise() - mean.transpose()).transpose());
  out = log_norm - 0.5 * Z.colwise().squaredNorm().transpose().array();
  return true;
}

}  // namespace detail

inline GmmFitResult fit_gmm_weight(const Matrix& X, const Vector& weights, Rng& rng,
                                   const GmmFitOptions& opt = {});

namespace detail {

inline GmmFitResult fit_gmm_fixed_k(const Matrix& X, const Vector& weights, Rng& rng,
                                    const GmmFitOptions& opt) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const double wsum = weights.sum();
  const Vector w = weights / wsum;
  const Vector gmean = X.transpose() * w;
  const Matrix gcov = weighted_cov(X, w, gmean);
  const double reg =
      opt.reg_covar >= 0.0 ? opt.reg_covar : 1e-6 * std::max(gcov.diagonal().mean(), 1e-300);

  EmState st;
  int K = opt.n_components;
  if (opt.initial && opt.initial->dim() == d && static_cast<int>(opt.initial->size()) == K) {
    st.pi = opt.initial->alpha() / opt.initial->alpha().sum();
    for (const auto& c : opt.initial->components()) {
      st.means.push_back(c.mean);
      st.covs.push_back(c.cov);
    }
  } else {
    // k-means++ seeding from the weighted empirical distribution, then one
    // hard assignment to get starting covariances.
    std::vector<Vector> centers{X.row(draw_weighted(w, rng)).transpose()};
    Vector dist2 = (X.rowwise() - centers[0].transpose()).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < K) {
      const Vector score = w.cwiseProduct(dist2);
      const Eigen::Index pick = score.sum() > 0.0 ? draw_weighted(score, rng) : draw_weighted(w, rng);
      centers.push_back(X.row(pick).transpose());
      dist2 = dist2.cwiseMin((X.rowwise() - centers.back().transpose()).rowwise().squaredNorm());
    }
    std::vector<Eigen::Index> label(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < K; ++c) {
        const double dd = (X.row(k).transpose() - centers[static_cast<std::size_t>(c)]).squaredNorm();
        if (dd < bd) { bd = dd; best = c; }
      }
      label[static_cast<std::size_t>(k)] = best;
    }
    st.pi = Vector::Zero(K);
    for (int c = 0; c < K; ++c) {
      Vector wc = Vector::Zero(n);
      for (Eigen::Index k = 0; k < n; ++k)
        if (label[static_cast<std::size_t>(k)] == c) wc[k] = w[k];
      const double mass = wc.sum();
      if (mass > 0.0) {
        const Vector m = X.transpose() * wc / mass;
        Matrix C = weighted_cov(X, wc, m);
        C.diagonal().array() += reg;
        st.pi[c] = mass;
        st.means.push_back(m);
        st.covs.push_back(C);
      } else {
        st.pi[c] = 1e-3;
        st.means.push_back(centers[static_cast<std::size_t>(c)]);
        Matrix C = gcov;
        C.diagonal().array() += reg;
        st.covs.push_back(C);
      }
    }
    st.pi /= st.pi.sum();
  }

  std::vector<int> reinits(static_cast<std::size_t>(K), 0);
  GmmFitResult res;
  Eigen::ArrayXXd logp(n, K);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it + 1;
    // E-step. A component whose covariance is unusable is re-seeded or dropped.
    for (int c = 0; c < K;) {
      auto col = logp.col(c);
      if (st.pi[c] > 0.0 && log_gauss_rows(X, st.means[static_cast<std::size_t>(c)],
                                            st.covs[static_cast<std::size_t>(c)], col)) {
        logp.col(c) += std::log(st.pi[c]);
        ++c;
        continue;
      }
      if (reinits[static_cast<std::size_t>(c)] < opt.max_reinit || K == 1) {
        ++reinits[static_cast<std::size_t>(c)];
        st.means[static_cast<std::size_t>(c)] = X.row(draw_weighted(w, rng)).transpose();
        Matrix C = gcov;
        C.diagonal().array() += std::max(reg, 1e-12);
        st.covs[static_cast<std::size_t>(c)] = C;
        st.pi[c] = 1.0 / K;
        st.pi /= st.pi.sum();
        if (K == 1 && reinits[0] > opt.max_reinit + 1)
          throw Error("fit_gmm_weight: covariance collapsed and could not be recovered");
        c = 0;  // mixing weights changed; redo every column
        continue;
      }
      // Drop component c.
      st.means.erase(st.means.begin() + c);
      st.covs.erase(st.covs.begin() + c);
      reinits.erase(reinits.begin() + c);
      Vector pi(K - 1);
      pi << st.pi.head(c), st.pi.tail(K - 1 - c);
      st.pi = pi / pi.sum();
      --K;
      ++res.dropped;
      logp.resize(n, K);
      c = 0;
    }
    Vector ll_rows(n);
    for (Eigen::Index k = 0; k < n; ++k) ll_rows[k] = logsumexp(logp.row(k).transpose());
    const double ll = w.dot(ll_rows);
    res.loglik_history.push_back(ll);
    if (std::isfinite(prev) && std::abs(ll - prev) <= opt.tol * std::max(1.0, std::abs(ll))) {
      res.converged = true;
      break;
    }
    prev = ll;

    // M-step with weighted responsibilities.
    const Eigen::ArrayXXd resp = (logp.colwise() - ll_rows.array()).exp();
    for (int c = 0; c < K; ++c) {
      const Vector rc = (resp.col(c) * w.array()).matrix();
      const double mass = rc.sum();
      st.pi[c] = mass;
      if (mass <= 1e-300) continue;
      st.means[static_cast<std::size_t>(c)] = X.transpose() * rc / mass;
      Matrix C = weighted_cov(X, rc, st.means[static_cast<std::size_t>(c)]);
      C.diagonal().array() += reg;
      st.covs[static_cast<std::size_t>(c)] = 0.5 * (C + C.transpose());
    }
    st.pi /= st.pi.sum();
  }

  // Final parameters must be usable; components that died in the last M-step go.
  const double mass = wsum / static_cast<double>(n);
  std::vector<GaussianComponent> comps;
  std::vector<double> alphas;
  for (int c = 0; c < K; ++c) {
    Eigen::LLT<Matrix> llt(st.covs[static_cast<std::size_t>(c)]);
    if (st.pi[c] <= 0.0 || llt.info() != Eigen::Success) {
      ++res.dropped;
      continue;
    }
    comps.push_back({st.means[static_cast<std::size_t>(c)], st.covs[static_cast<std::size_t>(c)]});
    alphas.push_back(st.pi[c]);
  }
  if (comps.empty()) throw Error("fit_gmm_weight: every component degenerated");
  Vector alpha = Eigen::Map<Vector>(alphas.data(), static_cast<Eigen::Index>(alphas.size()));
  alpha *= mass / alpha.sum();
  res.mixture = GaussianMixture(std::move(alpha), std::move(comps));
  return res;
}

}  // namespace detail

// Fits Σ α_i N(x; ω_i, Σ_i) to the function whose importance-weighted samples
// are (X, weights): if X ~ q, pass weights = f(x)/q(x). The mixture's total
// mass Σα_i is the Monte-Carlo estimate mean(weights) of ∫f.
inline GmmFitResult fit_gmm_weight(const Matrix& X, const Vector& weights, Rng& rng,
                                   const GmmFitOptions& opt) {
  detail::require(X.rows() == weights.size(), "fit_gmm_weight: one weight per sample");
  detail::require(X.rows() >= 2, "fit_gmm_weight: need at least two samples");
  detail::require(opt.n_components >= 1, "fit_gmm_weight: n_components must be >= 1");
  detail::require((weights.array() >= 0.0).all() && weights.allFinite(),
                  "fit_gmm_weight: weights must be finite and >= 0");
  detail::require(weights.sum() > 0.0, "fit_gmm_weight: weights are all zero");
  if (!opt.select_by_bic) return detail::fit_gmm_fixed_k(X, weights, rng, opt);

  const auto d = static_cast<double>(X.cols());
  const auto n = static_cast<double>(X.rows());
  std::optional<GmmFitResult> best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= opt.n_components; ++k) {
    GmmFitOptions sub = opt;
    sub.n_components = k;
    sub.select_by_bic = false;
    auto r = detail::fit_gmm_fixed_k(X, weights, rng, sub);
    const double params = static_cast<double>(k) * (d + d * (d + 1) / 2) + (k - 1);
    const double bic = -2.0 * n * r.loglik_history.back() + params * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(r);
    }
  }
  return std::move(*best);
}

}  // namespace owsample
