#pragma once

// The likelihood ratio w(x) = p_x(x) / p_μ(μ(x)): output-density estimation
// from surrogate samples, the ratio and its gradient, and the Gaussian-mixture
// fit that makes weighted variance integrals analytic.

#include "owsample/gmm.hpp"
#include "owsample/gp.hpp"
#include "owsample/kde.hpp"
#include "owsample/prior.hpp"

namespace owsample {

enum class SamplingMeasure { prior, uniform };

// Surrogate output density plus the samples behind it, kept for the GMM fit.
struct OutputDensityEstimate {
  OutputDensity density;
  Matrix inputs;          // M x d
  Vector outputs;         // μ at each input
  Vector sampling_density;  // q(x) for each input
};

inline OutputDensityEstimate output_density_from_inputs(const GPModel& model, Matrix inputs,
                                                        Vector sampling_density,
                                                        Eigen::Index grid_size = kDefaultGridSize) {
  OutputDensityEstimate est;
  est.outputs = model.posterior_mean_batch(inputs);
  est.density = kde_density(est.outputs, grid_size);
  est.inputs = std::move(inputs);
  est.sampling_density = std::move(sampling_density);
  return est;
}

// Prior draws are truncated to the search box by rejection; the truncation
// constant is treated as 1 when forming importance weights.
inline OutputDensityEstimate estimate_output_density(const GPModel& model, const InputPrior& prior,
                                                     const BoxBounds& box, Eigen::Index n_samples,
                                                     SamplingMeasure measure, Rng& rng,
                                                     Eigen::Index grid_size = kDefaultGridSize) {
  detail::require(n_samples >= 1000, "estimate_output_density: need at least 1000 samples");
  detail::require_dim(prior.dim(), model.dim(), "estimate_output_density");
  Matrix X(n_samples, model.dim());
  Vector q(n_samples);
  if (measure == SamplingMeasure::prior) {
    for (Eigen::Index k = 0; k < n_samples; ++k) {
      X.row(k) = prior.sample_in_box(box, rng).transpose();
      q[k] = prior.pdf(X.row(k).transpose());
    }
  } else {
    const double inv_vol = 1.0 / box.volume();
    for (Eigen::Index k = 0; k < n_samples; ++k) X.row(k) = uniform_in_box(box, rng).transpose();
    q.setConstant(inv_vol);
  }
  return output_density_from_inputs(model, std::move(X), std::move(q), grid_size);
}

inline constexpr double kDensityFloorFactor = 1e-9;

class LikelihoodRatio {
 public:
  LikelihoodRatio(const InputPrior& prior, const GPModel& model, const OutputDensity& density)
      : prior_(&prior), model_(&model), density_(&density),
        floor_(kDensityFloorFactor * density.max()) {}

  double floor() const { return floor_; }

  double output_term(double mu) const { return std::max(density_->value(mu), floor_); }

  double operator()(const Vector& x) const {
    return prior_->pdf(x) / output_term(model_->posterior_mean(x));
  }

  ValueGrad value_grad(const Vector& x) const {
    const double px = prior_->pdf(x);
    const Vector dpx = prior_->pdf_grad(x);
    const double mu = model_->posterior_mean(x);
    const double raw = density_->value(mu);
    if (raw <= floor_) return {px / floor_, dpx / floor_};
    const Vector dmu = model_->posterior_mean_grad(x);
    const double dp = density_->derivative(mu);
    return {px / raw, dpx / raw - (px * dp / (raw * raw)) * dmu};
  }

 private:
  const InputPrior* prior_;
  const GPModel* model_;
  const OutputDensity* density_;
  double floor_;
};

inline double likelihood_ratio(const Vector& x, const InputPrior& prior, const GPModel& model,
                               const OutputDensity& density) {
  return LikelihoodRatio(prior, model, density)(x);
}

inline Vector likelihood_ratio_grad(const Vector& x, const InputPrior& prior, const GPModel& model,
                                    const OutputDensity& density) {
  return LikelihoodRatio(prior, model, density).value_grad(x).grad;
}

// Fits the weight mixture to w over the estimate's samples. At most
// `max_samples` of them are used (the leading ones; draws are i.i.d.).
inline GmmFitResult fit_weight_mixture(const OutputDensityEstimate& est, const InputPrior& prior,
                                       Rng& rng, const GmmFitOptions& opt = {},
                                       Eigen::Index max_samples = 0) {
  const Eigen::Index n = max_samples > 0 ? std::min(max_samples, est.inputs.rows())
                                         : est.inputs.rows();
  const double floor = kDensityFloorFactor * est.density.max();
  Vector iw(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double pmu = std::max(est.density.value(est.outputs[k]), floor);
    iw[k] = prior.pdf(est.inputs.row(k).transpose()) / (pmu * est.sampling_density[k]);
  }
  return fit_gmm_weight(est.inputs.topRows(n), iw, rng, opt);
}

}  // namespace owsample
