#pragma once

// Acquisition functions (all maximized): uncertainty sampling, its
// likelihood-weighted variants, and integrated variance reduction with
// uniform, input-density or likelihood-ratio weighting. Values and
// gradients are analytic.

#include "owsample/gmm.hpp"
#include "owsample/gp.hpp"
#include "owsample/likelihood_weight.hpp"
#include "owsample/prior.hpp"

#include <array>
#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace owsample {

enum class AcquisitionKind { US, US_LW_RAW, US_LW, IVR, IVR_IW, IVR_LW };

inline constexpr std::array<AcquisitionKind, 6> kAllAcquisitions{
    AcquisitionKind::US,  AcquisitionKind::US_LW_RAW, AcquisitionKind::US_LW,
    AcquisitionKind::IVR, AcquisitionKind::IVR_IW,    AcquisitionKind::IVR_LW};

inline std::string_view to_string(AcquisitionKind k) {
  switch (k) {
    case AcquisitionKind::US: return "US";
    case AcquisitionKind::US_LW_RAW: return "US_LW_RAW";
    case AcquisitionKind::US_LW: return "US_LW";
    case AcquisitionKind::IVR: return "IVR";
    case AcquisitionKind::IVR_IW: return "IVR_IW";
    case AcquisitionKind::IVR_LW: return "IVR_LW";
  }
  return "?";
}

// Accepts the canonical tags and their hyphenated spellings, case-insensitive.
inline std::optional<AcquisitionKind> parse_acquisition(std::string_view s) {
  std::string norm;
  for (char c : s) norm.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (auto k : kAllAcquisitions)
    if (norm == to_string(k)) return k;
  return std::nullopt;
}

inline bool needs_output_density(AcquisitionKind k) {
  return k == AcquisitionKind::US_LW_RAW;
}
inline bool needs_weight_mixture(AcquisitionKind k) {
  return k == AcquisitionKind::US_LW || k == AcquisitionKind::IVR_LW;
}

struct AcquisitionContext {
  std::shared_ptr<const GPModel> model;
  std::shared_ptr<const InputPrior> prior;
  std::optional<GaussianMixture> weight_mixture;  // approximates w(x)
  std::optional<GaussianMixture> prior_mixture;   // approximates a non-Gaussian p_x
  std::shared_ptr<const OutputDensity> output_density;
};

namespace detail {

// Everything the integrated-variance-reduction family needs, held in one
// scalar type so the evaluation can be repeated in extended precision.
template <class T>
struct IvrState {
  MatrixT<T> inputs;
  VectorT<T> inv_theta;
  T signal_variance;
  Eigen::LLT<MatrixT<T>> llt;  // of K + (σ_ε² + jitter) I
  MatrixT<T> integral_matrix;  // S_ij = s(X_i, X_j)
  std::optional<BasicKhat<T>> plain;
  std::vector<T> alphas;
  std::vector<BasicWeightedKhat<T>> weighted;
  std::vector<MatrixT<T>> whitened;  // inputs whitened per component

  IvrState(const GPModel& model, const std::vector<std::pair<double, GaussianComponent>>& comps) {
    const auto& hyper = model.hyper();
    inputs = model.data().inputs.cast<T>();
    inv_theta = hyper.lengthscales.cast<T>().array().inverse().matrix();
    signal_variance = hyper.signal_variance;
    const Eigen::Index n = inputs.rows();
    MatrixT<T> K = rbf_kernel_matrix(model.data().inputs, hyper).cast<T>();
    K.diagonal().array() += T(hyper.noise_variance) + T(model.jitter());
    llt.compute(K);
    if (llt.info() != Eigen::Success) throw FactorizationError("Acquisition: covariance not SPD");
    if (comps.empty()) plain.emplace(hyper);
    for (const auto& [alpha, comp] : comps) {
      alphas.push_back(T(alpha));
      weighted.emplace_back(hyper, comp);
      whitened.push_back(weighted.back().whiten(inputs));
    }
    integral_matrix.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      VectorT<T> row(n);
      integral_column(inputs.row(a).transpose(), row, nullptr);
      integral_matrix.col(a) = row;
    }
    integral_matrix = (T(0.5) * (integral_matrix + integral_matrix.transpose())).eval();
  }

  // out_j = s(x, X_j) for every input, with the x-gradients as rows of *grad.
  void integral_column(const VectorT<T>& x, VectorT<T>& out, MatrixT<T>* grad) const {
    const Eigen::Index n = inputs.rows();
    out.setZero(n);
    if (grad) grad->setZero(n, x.size());
    if (plain) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto vg = (*plain)(x, inputs.row(j).transpose());
        out[j] = vg.value;
        if (grad) grad->row(j) = vg.grad.transpose();
      }
      return;
    }
    for (std::size_t i = 0; i < weighted.size(); ++i)
      weighted[i].accumulate(x, inputs, whitened[i], alphas[i], out, grad);
  }

  // Σ_i α_i k̂ᵢ(a, b) with its gradient in a; plain k̂ when unweighted.
  BasicValueGrad<T> integral(const VectorT<T>& a, const VectorT<T>& b, bool want_grad) const {
    if (plain) {
      if (want_grad) return (*plain)(a, b);
      return {plain->value(a, b), VectorT<T>()};
    }
    BasicValueGrad<T> out{T(0), want_grad ? VectorT<T>(VectorT<T>::Zero(a.size())) : VectorT<T>()};
    for (std::size_t i = 0; i < weighted.size(); ++i) {
      if (want_grad) {
        const auto vg = weighted[i](a, b);
        out.value += alphas[i] * vg.value;
        out.grad += alphas[i] * vg.grad;
      } else {
        out.value += alphas[i] * weighted[i].value(a, b);
      }
    }
    return out;
  }
};

template <class T>
struct IvrResult {
  BasicValueGrad<T> value_grad;
  bool well_conditioned = true;
};

}  // namespace detail

class Acquisition {
 public:
  static constexpr double kZeroVarianceFactor = 1e-14;
  // Below this ratio of result to summed term magnitudes the double
  // evaluation is repeated in long double.
  static constexpr double kCancellationRatio = 1e-6;

  Acquisition(AcquisitionKind kind, AcquisitionContext ctx)
      : kind_(kind), ctx_(std::move(ctx)) {
    detail::require(ctx_.model != nullptr, "Acquisition: model required");
    const auto& model = *ctx_.model;
    if (kind_ != AcquisitionKind::US && kind_ != AcquisitionKind::IVR)
      detail::require(ctx_.prior != nullptr, "Acquisition: prior required");
    if (needs_output_density(kind_)) {
      detail::require(ctx_.output_density != nullptr,
                      concat_kind("output density required"));
      ratio_.emplace(*ctx_.prior, model, *ctx_.output_density);
    }
    if (needs_weight_mixture(kind_))
      detail::require(ctx_.weight_mixture.has_value(), concat_kind("weight mixture required"));

    std::vector<std::pair<double, GaussianComponent>> comps;
    auto add_mixture = [&](const GaussianMixture& g) {
      detail::require_dim(g.dim(), model.dim(), "Acquisition(mixture)");
      for (std::size_t i = 0; i < g.size(); ++i)
        comps.emplace_back(g.alpha()[static_cast<Eigen::Index>(i)], g.components()[i]);
    };
    if (kind_ == AcquisitionKind::IVR_IW) {
      if (ctx_.prior->is_gaussian()) {
        comps.emplace_back(1.0, ctx_.prior->as_gaussian());
      } else {
        detail::require(ctx_.prior_mixture.has_value(),
                        concat_kind("non-Gaussian prior needs a prior mixture"));
        add_mixture(*ctx_.prior_mixture);
      }
    } else if (kind_ == AcquisitionKind::IVR_LW) {
      add_mixture(*ctx_.weight_mixture);
    }
    if (kind_ == AcquisitionKind::IVR || !comps.empty()) {
      ivr_ = std::make_shared<const detail::IvrState<double>>(model, comps);
      ivr_extended_ = std::make_shared<const detail::IvrState<long double>>(model, comps);
    }
  }

  AcquisitionKind kind() const { return kind_; }
  const AcquisitionContext& context() const { return ctx_; }
  Eigen::Index dim() const { return ctx_.model->dim(); }

  double value(const Vector& x) const { return evaluate(x, false).value; }
  ValueGrad value_and_grad(const Vector& x) const { return evaluate(x, true); }
  Vector grad(const Vector& x) const { return evaluate(x, true).grad; }

 private:
  std::string concat_kind(const char* what) const {
    return detail::concat("Acquisition ", to_string(kind_), ": ", what);
  }

  ValueGrad evaluate(const Vector& x, bool want_grad) const {
    const auto& model = *ctx_.model;
    detail::require_dim(x.size(), model.dim(), "Acquisition");
    if (ivr_) {
      const auto r = evaluate_ivr(*ivr_, x, want_grad);
      if (r.well_conditioned) return r.value_grad;
      const auto ext = evaluate_ivr(*ivr_extended_, x, want_grad).value_grad;
      return {static_cast<double>(ext.value),
              want_grad ? Vector(ext.grad.template cast<double>()) : Vector()};
    }

    const Eigen::Index d = model.dim();
    const double sf2 = model.hyper().signal_variance;
    const Vector k = model.kernel_column(x);
    const Vector v = model.solve(k);
    const double var = sf2 - k.dot(v);
    if (!(var >= kZeroVarianceFactor * sf2))
      return {0.0, want_grad ? Vector(Vector::Zero(d)) : Vector()};
    Vector dvar;
    if (want_grad) dvar = -2.0 * model.kernel_column_jacobian(x, k).transpose() * v;

    switch (kind_) {
      case AcquisitionKind::US:
        return {var, dvar};
      case AcquisitionKind::US_LW: {
        const auto& g = *ctx_.weight_mixture;
        const double w = g(x);
        if (!want_grad) return {var * w, Vector()};
        return {var * w, dvar * w + var * g.grad(x)};
      }
      case AcquisitionKind::US_LW_RAW: {
        if (!want_grad) return {var * (*ratio_)(x), Vector()};
        const auto w = ratio_->value_grad(x);
        return {var * w.value, dvar * w.value + var * w.grad};
      }
      default:
        throw std::logic_error("Acquisition: unreachable kind");
    }
  }

  // Integrated variance reduction: a(x)/σ²(x) with
  //   a = s(x,x) + vᵀ S v − 2 vᵀ h,  v = K⁻¹k(X,x),  h_j = s(x, X_j).
  template <class T>
  static detail::IvrResult<T> evaluate_ivr(const detail::IvrState<T>& st, const Vector& xd,
                                           bool want_grad) {
    using std::abs, std::exp;
    using V = VectorT<T>;
    const V x = xd.cast<T>();
    const Eigen::Index n = st.inputs.rows(), d = x.size();
    const T sf2 = st.signal_variance;
    const BasicValueGrad<T> zero{T(0), want_grad ? V(V::Zero(d)) : V()};

    V k(n);
    MatrixT<T> J;
    if (want_grad) J.resize(n, d);
    for (Eigen::Index j = 0; j < n; ++j) {
      const V diff = x - st.inputs.row(j).transpose();
      k[j] = sf2 * exp(T(-0.5) * (diff.array().square() * st.inv_theta.array()).sum());
      if (want_grad) J.row(j) = (-k[j] * diff.array() * st.inv_theta.array()).matrix().transpose();
    }
    const V v = st.llt.solve(k);
    const T var = sf2 - k.dot(v);
    if (!(var >= T(kZeroVarianceFactor) * sf2)) return {zero, true};

    V h;
    MatrixT<T> dh;
    st.integral_column(x, h, want_grad ? &dh : nullptr);
    const auto sxx = st.integral(x, x, want_grad);
    const V Sv = st.integral_matrix * v;
    const T vSv = v.dot(Sv), vh = v.dot(h);
    const T a = sxx.value + vSv - T(2) * vh;
    const T magnitude = abs(sxx.value) + abs(vSv) + T(2) * abs(vh);
    const bool well_conditioned =
        a > T(kCancellationRatio) * magnitude && var > T(kCancellationRatio) * sf2;
    if (!(a > T(0))) return {zero, well_conditioned};
    const T value = a / var;
    if (!want_grad) return {{value, V()}, well_conditioned};
    // d s(x,x)/dx is twice the first-argument gradient by symmetry.
    const V dvar = T(-2) * J.transpose() * v;
    const V da = T(2) * J.transpose() * st.llt.solve(V(Sv - h)) - T(2) * dh.transpose() * v +
                 T(2) * sxx.grad;
    return {{value, (da - value * dvar) / var}, well_conditioned};
  }

  AcquisitionKind kind_;
  AcquisitionContext ctx_;
  std::optional<LikelihoodRatio> ratio_;
  std::shared_ptr<const detail::IvrState<double>> ivr_;
  std::shared_ptr<const detail::IvrState<long double>> ivr_extended_;
};

}  // namespace owsample
