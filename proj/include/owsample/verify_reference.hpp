#pragma once

// Quad-precision re-implementation of the acquisition values, written from
// the closed forms with its own small dense algebra. Used as the
// finite-difference oracle: in double precision the integrated variance
// reduction is a difference of terms up to ~1e10 times larger than the
// result, which drowns central differences in rounding noise.

#include "owsample/acquisition.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <vector>

namespace owsample::verify {

using Quad = boost::multiprecision::cpp_bin_float_quad;

namespace detail_ref {

using QVec = std::vector<Quad>;

// Row-major square matrix.
struct QMat {
  std::size_t n = 0;
  QVec a;
  explicit QMat(std::size_t size = 0) : n(size), a(size * size, Quad(0)) {}
  Quad& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const Quad& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

inline QMat cholesky(QMat A) {
  for (std::size_t j = 0; j < A.n; ++j) {
    Quad s = A(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= A(j, k) * A(j, k);
    if (!(s > 0)) throw FactorizationError("reference: matrix not positive definite");
    A(j, j) = sqrt(s);
    for (std::size_t i = j + 1; i < A.n; ++i) {
      Quad t = A(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= A(i, k) * A(j, k);
      A(i, j) = t / A(j, j);
    }
    for (std::size_t i = 0; i < j; ++i) A(i, j) = 0;
  }
  return A;
}

inline QVec forward(const QMat& L, QVec b) {
  for (std::size_t i = 0; i < L.n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= L(i, k) * b[k];
    b[i] /= L(i, i);
  }
  return b;
}

inline QVec backward(const QMat& L, QVec b) {
  for (std::size_t i = L.n; i-- > 0;) {
    for (std::size_t k = i + 1; k < L.n; ++k) b[i] -= L(k, i) * b[k];
    b[i] /= L(i, i);
  }
  return b;
}

inline Quad dot(const QVec& a, const QVec& b) {
  Quad s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Quad log_det(const QMat& L) {
  Quad s = 0;
  for (std::size_t i = 0; i < L.n; ++i) s += 2 * log(L(i, i));
  return s;
}

inline QVec to_quad(const Vector& v) {
  QVec out(static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[static_cast<Eigen::Index>(i)];
  return out;
}

inline QMat to_quad(const Matrix& m) {
  QMat out(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < out.n; ++i)
    for (std::size_t j = 0; j < out.n; ++j)
      out(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

struct QComponent {
  Quad alpha;
  QVec mean;
  QMat chol_cov;           // for the density
  QMat chol_spread;        // of Θ + 2Σ
  Quad log_det_ratio;      // ½ log(|Θ| / |Θ + 2Σ|)
};

}  // namespace detail_ref

class ReferenceAcquisition {
 public:
  ReferenceAcquisition(AcquisitionKind kind, const AcquisitionContext& ctx) : kind_(kind) {
    using namespace detail_ref;
    detail::require(kind != AcquisitionKind::US_LW_RAW,
                    "reference: the raw likelihood ratio has no extended-precision form");
    const auto& model = *ctx.model;
    const auto& hyper = model.hyper();
    d_ = static_cast<std::size_t>(model.dim());
    sf2_ = hyper.signal_variance;
    theta_ = to_quad(hyper.lengthscales);
    const Matrix& X = model.data().inputs;
    for (Eigen::Index i = 0; i < X.rows(); ++i) inputs_.push_back(to_quad(Vector(X.row(i).transpose())));
    const std::size_t n = inputs_.size();
    QMat K(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) K(i, j) = kernel(inputs_[i], inputs_[j]);
    for (std::size_t i = 0; i < n; ++i)
      K(i, i) += Quad(hyper.noise_variance) + Quad(model.jitter());
    chol_ = cholesky(K);

    if (kind == AcquisitionKind::IVR_IW) {
      if (ctx.prior->is_gaussian())
        add_component(1.0, ctx.prior->as_gaussian());
      else
        for (std::size_t i = 0; i < ctx.prior_mixture->size(); ++i)
          add_component(ctx.prior_mixture->alpha()[static_cast<Eigen::Index>(i)],
                        ctx.prior_mixture->components()[i]);
    } else if (kind == AcquisitionKind::IVR_LW || kind == AcquisitionKind::US_LW) {
      for (std::size_t i = 0; i < ctx.weight_mixture->size(); ++i)
        add_component(ctx.weight_mixture->alpha()[static_cast<Eigen::Index>(i)],
                      ctx.weight_mixture->components()[i]);
    }
    if (is_ivr()) {
      integral_ = QMat(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) integral_(i, j) = integral(inputs_[i], inputs_[j]);
    }
  }

  Quad value(const detail_ref::QVec& x) const {
    using namespace detail_ref;
    const std::size_t n = inputs_.size();
    QVec k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = kernel(x, inputs_[i]);
    const QVec u = forward(chol_, k);
    const Quad var = sf2_ - dot(u, u);
    if (!(var >= Acquisition::kZeroVarianceFactor * sf2_)) return Quad(0);
    switch (kind_) {
      case AcquisitionKind::US: return var;
      case AcquisitionKind::US_LW: return var * mixture_pdf(x);
      default: break;
    }
    const QVec v = backward(chol_, u);
    QVec h(n), Sv(n, Quad(0));
    for (std::size_t j = 0; j < n; ++j) h[j] = integral(x, inputs_[j]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) Sv[i] += integral_(i, j) * v[j];
    const Quad a = integral(x, x) + dot(v, Sv) - 2 * dot(v, h);
    return a > 0 ? a / var : Quad(0);
  }

  double value(const Vector& x) const { return static_cast<double>(value(detail_ref::to_quad(x))); }

  // Central differences in quad precision with step h_i.
  Vector gradient(const Vector& x, const Vector& step) const {
    const auto q = detail_ref::to_quad(x);
    Vector g(x.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      auto xp = q, xm = q;
      const Quad h = step[static_cast<Eigen::Index>(i)];
      xp[i] += h;
      xm[i] -= h;
      g[static_cast<Eigen::Index>(i)] = static_cast<double>((value(xp) - value(xm)) / (2 * h));
    }
    return g;
  }

 private:
  bool is_ivr() const {
    return kind_ == AcquisitionKind::IVR || kind_ == AcquisitionKind::IVR_IW ||
           kind_ == AcquisitionKind::IVR_LW;
  }

  void add_component(double alpha, const GaussianComponent& c) {
    using namespace detail_ref;
    QComponent q;
    q.alpha = alpha;
    q.mean = to_quad(c.mean);
    q.chol_cov = cholesky(to_quad(c.cov));
    QMat spread = to_quad(Matrix(2.0 * c.cov));
    Quad log_det_theta = 0;
    for (std::size_t i = 0; i < d_; ++i) {
      spread(i, i) += theta_[i];
      log_det_theta += log(theta_[i]);
    }
    q.chol_spread = cholesky(spread);
    q.log_det_ratio = (log_det_theta - log_det(q.chol_spread)) / 2;
    comps_.push_back(std::move(q));
  }

  Quad kernel(const detail_ref::QVec& a, const detail_ref::QVec& b) const {
    Quad s = 0;
    for (std::size_t i = 0; i < d_; ++i) s += (a[i] - b[i]) * (a[i] - b[i]) / theta_[i];
    return sf2_ * exp(-s / 2);
  }

  Quad mixture_pdf(const detail_ref::QVec& x) const {
    using namespace detail_ref;
    Quad total = 0;
    const Quad log2pi = log(2 * boost::math::constants::pi<Quad>());
    for (const auto& c : comps_) {
      QVec r(d_);
      for (std::size_t i = 0; i < d_; ++i) r[i] = x[i] - c.mean[i];
      const QVec z = forward(c.chol_cov, r);
      total += c.alpha * exp(-dot(z, z) / 2 - log_det(c.chol_cov) / 2 - Quad(d_) * log2pi / 2);
    }
    return total;
  }

  // ∫ k(a,x') k(x',b) w(x') dx' with w the mixture, or Lebesgue measure
  // when there are no components.
  Quad integral(const detail_ref::QVec& a, const detail_ref::QVec& b) const {
    using namespace detail_ref;
    Quad sep = 0;
    for (std::size_t i = 0; i < d_; ++i) sep += (a[i] - b[i]) * (a[i] - b[i]) / (4 * theta_[i]);
    const Quad sf4 = sf2_ * sf2_;
    if (comps_.empty()) {
      Quad log_det_theta = 0;
      for (const auto& t : theta_) log_det_theta += log(t);
      return sf4 * pow(boost::math::constants::pi<Quad>(), Quad(d_) / 2) * exp(log_det_theta / 2 - sep);
    }
    Quad total = 0;
    for (const auto& c : comps_) {
      QVec r(d_);
      for (std::size_t i = 0; i < d_; ++i) r[i] = (a[i] + b[i]) / 2 - c.mean[i];
      const QVec z = forward(c.chol_spread, r);
      total += c.alpha * sf4 * exp(c.log_det_ratio - sep - dot(z, z));
    }
    return total;
  }

  AcquisitionKind kind_;
  std::size_t d_ = 0;
  Quad sf2_;
  detail_ref::QVec theta_;
  std::vector<detail_ref::QVec> inputs_;
  detail_ref::QMat chol_;
  detail_ref::QMat integral_;
  std::vector<detail_ref::QComponent> comps_;
};

}  // namespace owsample::verify
