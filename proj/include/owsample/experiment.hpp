#pragma once

// Sequential design driver, baselines, the log-pdf error metric against a
// Monte-Carlo ground truth, and replicate aggregation.

#include "owsample/acquisition.hpp"
#include "owsample/active_subspace.hpp"
#include "owsample/benchmarks/registry.hpp"
#include "owsample/gmm.hpp"
#include "owsample/gp.hpp"
#include "owsample/kde.hpp"
#include "owsample/likelihood_weight.hpp"
#include "owsample/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace owsample {

enum class Baseline { none, lhs, active_subspace };

struct ExperimentConfig {
  std::string problem;
  AcquisitionKind acquisition = AcquisitionKind::US;
  int n_iter = 60;
  int n_init = 0;                // 0: d + 1
  double noise_variance = 0.0;   // observation noise added to f
  bool train_noise = true;       // false: the GP uses noise_variance as known
  int n_gmm = 2;
  bool gmm_bic = false;
  Eigen::Index gmm_max_samples = 20000;
  SamplingMeasure density_sampling = SamplingMeasure::prior;
  std::uint64_t seed = 0;
  Eigen::Index mc_samples = 100000;
  int replicates = 10;
  int gp_restarts = 8;
  int acq_restarts = 10;
  int acq_probes = 512;
  Baseline baseline = Baseline::none;
  ActiveSubspaceOptions active_subspace;
  Eigen::Index surrogate_points = 0;  // active-subspace baseline; 0: q + 1

  void validate() const;
};

// A configuration value that is missing, mistyped or out of range.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(detail::concat("config field '", field, "': ", what)), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline void ExperimentConfig::validate() const {
  auto check = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  check(!problem.empty(), "problem", "required");
  check(n_iter >= 0, "n_iter", "must be >= 0");
  check(n_init >= 0, "n_init", "must be >= 0");
  check(noise_variance >= 0.0, "noise_variance", "must be >= 0");
  check(n_gmm >= 1, "n_gmm", "must be >= 1");
  check(mc_samples >= 1000, "mc_samples", "must be >= 1000");
  check(replicates >= 1, "replicates", "must be >= 1");
  check(gp_restarts >= 1, "gp_restarts", "must be >= 1");
  check(acq_restarts >= 0, "acq_restarts", "must be >= 0");
  check(acq_probes >= 0, "acq_probes", "must be >= 0");
  check(acq_restarts + acq_probes > 0, "acq_restarts", "search needs restarts or probes");
  check(gmm_max_samples >= 0, "gmm_max_samples", "must be >= 0");
  check(surrogate_points >= 0, "surrogate_points", "must be >= 0");
}

class ExperimentError : public Error {
 public:
  ExperimentError(int iteration, const std::string& what)
      : Error(detail::concat("iteration ", iteration, ": ", what)), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

inline constexpr double kTruthFloorFactor = 1e-4;

struct GroundTruth {
  Matrix inputs;          // prior samples truncated to the box
  Vector outputs;         // f at each input
  OutputDensity density;  // KDE of the outputs
  Vector log_pdf;         // log p_f on the density grid, clipped at the floor
  double floor = 0.0;

  const UniformGrid& grid() const { return density.grid(); }
};

inline GroundTruth ground_truth_from_samples(Matrix inputs, Vector outputs) {
  GroundTruth t;
  t.density = kde_density(outputs);
  t.floor = kTruthFloorFactor * t.density.max();
  t.log_pdf = t.density.density().cwiseMax(t.floor).array().log().matrix();
  t.inputs = std::move(inputs);
  t.outputs = std::move(outputs);
  return t;
}

inline GroundTruth ground_truth_pdf(const BlackBoxProblem& problem, Eigen::Index mc_samples, Rng& rng) {
  detail::require(mc_samples >= 1000, "ground_truth_pdf: need at least 1000 samples");
  Matrix X = problem.prior->sample_matrix(mc_samples, rng, &problem.bounds);
  Vector y(mc_samples);
  for (Eigen::Index k = 0; k < mc_samples; ++k) y[k] = problem.evaluate(X.row(k).transpose());
  return ground_truth_from_samples(std::move(X), std::move(y));
}

// ∫|log p_μ − log p_f| dy over {p_f > floor}, trapezoid on the truth grid.
inline double log_pdf_error(const Vector& surrogate_outputs, const GroundTruth& truth) {
  const OutputDensity mu_density = kde_density(surrogate_outputs);
  const auto& grid = truth.grid();
  const Vector& pf = truth.density.density();
  double total = 0.0;
  double prev = 0.0;
  bool prev_in = false;
  for (Eigen::Index i = 0; i < grid.size; ++i) {
    const bool in = pf[i] > truth.floor;
    double e = 0.0;
    if (in) {
      const double pm = std::max(mu_density.value(grid.at(i)), truth.floor);
      e = std::abs(std::log(pm) - truth.log_pdf[i]);
      if (prev_in) total += 0.5 * grid.step * (prev + e);
    }
    prev = e;
    prev_in = in;
  }
  return total;
}

inline double log_pdf_error(const GPModel& model, const GroundTruth& truth) {
  return log_pdf_error(model.posterior_mean_batch(truth.inputs), truth);
}

// Everything shared by all replicates and acquisition kinds of one problem.
struct ExperimentSetup {
  BlackBoxProblem problem;
  std::shared_ptr<const GroundTruth> truth;
  std::optional<GaussianMixture> prior_mixture;  // only for non-Gaussian priors
  Matrix uniform_inputs;                          // only for uniform density sampling
};

inline std::uint64_t truth_seed(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : cfg.problem) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return mix_seed(cfg.seed, h);
}

inline std::uint64_t replicate_seed(const ExperimentConfig& cfg, int replicate) {
  return mix_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(replicate));
}

inline ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentSetup s{make_problem(cfg.problem), nullptr, std::nullopt, Matrix()};
  Rng rng = make_rng(truth_seed(cfg), 1);
  s.truth = std::make_shared<const GroundTruth>(ground_truth_pdf(s.problem, cfg.mc_samples, rng));
  if (!s.problem.prior->is_gaussian()) {
    Rng grng = make_rng(truth_seed(cfg), 2);
    const Matrix P = s.problem.prior->sample_matrix(cfg.mc_samples, grng, &s.problem.bounds);
    GmmFitOptions opt;
    opt.n_components = 2;
    s.prior_mixture = fit_gmm_weight(P, Vector::Ones(P.rows()), grng, opt).mixture;
  }
  if (cfg.density_sampling == SamplingMeasure::uniform) {
    Rng urng = make_rng(truth_seed(cfg), 3);
    s.uniform_inputs.resize(cfg.mc_samples, s.problem.dim());
    for (Eigen::Index k = 0; k < cfg.mc_samples; ++k)
      s.uniform_inputs.row(k) = uniform_in_box(s.problem.bounds, urng).transpose();
  }
  return s;
}

struct ExperimentRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  int n_init = 0;
  int first_iteration = 0;              // index of errors[0]
  Matrix visited;                       // n_init + n_iter rows
  Vector outputs;                       // noisy observations
  std::vector<double> errors;           // e(0..n_iter); LHS baseline: e(1..N)
  std::vector<double> cumulative_min;
  std::vector<double> wall_time;        // seconds per iteration
  Eigen::Index evaluations = 0;         // black-box calls
  int optimizer_warnings = 0;
  std::shared_ptr<const GPModel> final_model;
};

namespace detail {

inline void fill_cumulative_min(ExperimentRecord& r) {
  r.cumulative_min.resize(r.errors.size());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.errors.size(); ++i) r.cumulative_min[i] = m = std::min(m, r.errors[i]);
}

inline FitOptions fit_options(const ExperimentConfig& cfg) {
  FitOptions f;
  f.noise = cfg.train_noise ? NoiseSpec::learned() : NoiseSpec::fixed(cfg.noise_variance);
  f.n_starts = cfg.gp_restarts;
  return f;
}

}  // namespace detail

inline ExperimentRecord run_sequential(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                       int replicate) {
  using clock = std::chrono::steady_clock;
  const auto& P = setup.problem;
  const auto& truth = *setup.truth;
  const Eigen::Index d = P.dim();
  ExperimentRecord rec;
  rec.replicate = replicate;
  rec.seed = replicate_seed(cfg, replicate);
  rec.n_init = cfg.n_init > 0 ? cfg.n_init : static_cast<int>(d + 1);
  Rng rng = make_rng(rec.seed);
  const double noise_sd = std::sqrt(cfg.noise_variance);
  auto observe = [&](const Vector& x) {
    ++rec.evaluations;
    return P.evaluate(x) + noise_sd * standard_normal(rng);
  };

  Dataset data;
  const Matrix X0 = lhs_design(rec.n_init, P.bounds, rng);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) data.append(X0.row(i).transpose(), observe(X0.row(i).transpose()));

  FitOptions fit = detail::fit_options(cfg);
  fit.seed = child_seed(rng);
  auto model = std::make_shared<const GPModel>(fit_gp(data, fit));
  Vector mu = model->posterior_mean_batch(truth.inputs);
  rec.errors.push_back(log_pdf_error(mu, truth));

  const bool uniform = cfg.density_sampling == SamplingMeasure::uniform;
  std::optional<GaussianMixture> weight_mixture;
  for (int it = 1; it <= cfg.n_iter; ++it) {
    const auto t0 = clock::now();
    try {
      AcquisitionContext ctx;
      ctx.model = model;
      ctx.prior = P.prior;
      const auto kind = cfg.acquisition;
      if (needs_output_density(kind) || needs_weight_mixture(kind)) {
        const Matrix& inputs = uniform ? setup.uniform_inputs : truth.inputs;
        const Vector mu_s = uniform ? model->posterior_mean_batch(inputs) : mu;
        auto dens = std::make_shared<const OutputDensity>(kde_density(mu_s));
        if (needs_weight_mixture(kind)) {
          const Eigen::Index n = cfg.gmm_max_samples > 0 ? std::min(cfg.gmm_max_samples, inputs.rows())
                                                         : inputs.rows();
          const double floor = kDensityFloorFactor * dens->max();
          const double inv_q_uniform = P.bounds.volume();
          Vector iw(n);
          for (Eigen::Index k = 0; k < n; ++k) {
            const double pmu = std::max(dens->value(mu_s[k]), floor);
            // Prior draws: w/q = 1/p_μ. Uniform draws: w/q = p_x·|box|/p_μ.
            iw[k] = uniform ? P.prior->pdf(inputs.row(k).transpose()) * inv_q_uniform / pmu : 1.0 / pmu;
          }
          GmmFitOptions gopt;
          gopt.n_components = cfg.n_gmm;
          gopt.select_by_bic = cfg.gmm_bic;
          gopt.initial = weight_mixture;
          weight_mixture = fit_gmm_weight(inputs.topRows(n), iw, rng, gopt).mixture;
          ctx.weight_mixture = weight_mixture;
        }
        ctx.output_density = std::move(dens);
      }
      if (kind == AcquisitionKind::IVR_IW) ctx.prior_mixture = setup.prior_mixture;

      const Acquisition acq(kind, std::move(ctx));
      MaximizeOptions mopt;
      mopt.n_restarts = cfg.acq_restarts;
      mopt.n_probes = cfg.acq_probes;
      const auto best = maximize_acquisition(acq, P.bounds, rng, mopt);
      if (best.no_improvement) ++rec.optimizer_warnings;
      data.append(best.x, observe(best.x));

      fit.initial = model->hyper();
      fit.seed = child_seed(rng);
      model = std::make_shared<const GPModel>(fit_gp(data, fit));
      mu = model->posterior_mean_batch(truth.inputs);
      rec.errors.push_back(log_pdf_error(mu, truth));
    } catch (const ExperimentError&) {
      throw;
    } catch (const std::exception& e) {
      throw ExperimentError(it, e.what());
    }
    rec.wall_time.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  rec.visited = data.inputs;
  rec.outputs = data.outputs;
  rec.final_model = model;
  detail::fill_cumulative_min(rec);
  return rec;
}

// Fresh LHS design of size n_init + n for every n = 1..n_iter.
inline ExperimentRecord run_lhs_baseline(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                         int replicate) {
  using clock = std::chrono::steady_clock;
  const auto& P = setup.problem;
  ExperimentRecord rec;
  rec.replicate = replicate;
  rec.seed = replicate_seed(cfg, replicate);
  rec.n_init = cfg.n_init > 0 ? cfg.n_init : static_cast<int>(P.dim() + 1);
  rec.first_iteration = 1;
  Rng rng = make_rng(rec.seed);
  const double noise_sd = std::sqrt(cfg.noise_variance);
  FitOptions fit = detail::fit_options(cfg);
  std::shared_ptr<const GPModel> model;
  for (int n = 1; n <= cfg.n_iter; ++n) {
    const auto t0 = clock::now();
    try {
      Dataset data;
      data.inputs = lhs_design(rec.n_init + n, P.bounds, rng);
      data.outputs.resize(data.inputs.rows());
      for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
        data.outputs[i] = P.evaluate(data.inputs.row(i).transpose()) + noise_sd * standard_normal(rng);
        ++rec.evaluations;
      }
      if (model) fit.initial = model->hyper();
      fit.seed = child_seed(rng);
      model = std::make_shared<const GPModel>(fit_gp(data, fit));
      rec.errors.push_back(log_pdf_error(*model, *setup.truth));
    } catch (const std::exception& e) {
      throw ExperimentError(n, e.what());
    }
    rec.wall_time.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  if (model) {
    rec.visited = model->data().inputs;
    rec.outputs = model->data().outputs;
  }
  rec.final_model = model;
  detail::fill_cumulative_min(rec);
  return rec;
}

// One active-subspace surrogate at budget M(d+1) + surrogate_points.
inline ExperimentRecord run_active_subspace_baseline(const ExperimentConfig& cfg,
                                                     const ExperimentSetup& setup, int replicate) {
  const auto& P = setup.problem;
  ExperimentRecord rec;
  rec.replicate = replicate;
  rec.seed = replicate_seed(cfg, replicate);
  Rng rng = make_rng(rec.seed);
  ActiveSubspaceOptions aopt = cfg.active_subspace;
  aopt.noise_variance = cfg.noise_variance;
  const auto asub = build_active_subspace(P, aopt, rng);
  const Eigen::Index n_sur = cfg.surrogate_points > 0 ? cfg.surrogate_points : aopt.q + 1;
  FitOptions fit = detail::fit_options(cfg);
  const auto sur = as_surrogate(asub, P, n_sur, rng, cfg.noise_variance, fit);
  rec.evaluations = sur.evaluations();
  rec.errors.push_back(log_pdf_error(sur.predict_batch(setup.truth->inputs), *setup.truth));
  rec.final_model = std::make_shared<const GPModel>(sur.model());
  detail::fill_cumulative_min(rec);
  return rec;
}

inline ExperimentRecord run_replicate(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                      int replicate) {
  switch (cfg.baseline) {
    case Baseline::lhs: return run_lhs_baseline(cfg, setup, replicate);
    case Baseline::active_subspace: return run_active_subspace_baseline(cfg, setup, replicate);
    case Baseline::none: break;
  }
  return run_sequential(cfg, setup, replicate);
}

// Replicates fan out over at most `jobs` threads; results keep replicate order.
// A failing replicate leaves an empty slot and its message in `failures`.
struct ReplicateResults {
  std::vector<std::optional<ExperimentRecord>> records;
  std::vector<std::string> failures;
};

// `on_done` runs under a lock as each replicate finishes.
inline ReplicateResults run_replicates(
    const ExperimentConfig& cfg, const ExperimentSetup& setup, int jobs = 1,
    const std::function<void(const ExperimentRecord&)>& on_done = {}) {
  ReplicateResults out;
  out.records.resize(static_cast<std::size_t>(cfg.replicates));
  std::mutex mu;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.replicates; r = next++) {
      try {
        auto rec = run_replicate(cfg, setup, r);
        std::lock_guard lock(mu);
        if (on_done) on_done(rec);
        out.records[static_cast<std::size_t>(r)] = std::move(rec);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        out.failures.push_back(detail::concat("replicate ", r, ": ", e.what()));
      }
    }
  };
  const int n = std::max(1, std::min(jobs, cfg.replicates));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return out;
}

struct AggregateSeries {
  std::vector<double> median;
  std::vector<double> mad;
};

inline double median_of(std::vector<double> v) {
  detail::require(!v.empty(), "median_of: empty input");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

// Pointwise median and median absolute deviation of the cumulative-min series.
inline AggregateSeries aggregate(const std::vector<ExperimentRecord>& records) {
  detail::require(!records.empty(), "aggregate: no records");
  const std::size_t len = records.front().cumulative_min.size();
  for (const auto& r : records)
    detail::require(r.cumulative_min.size() == len, "aggregate: series lengths differ");
  AggregateSeries out;
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> col;
    for (const auto& r : records) col.push_back(r.cumulative_min[i]);
    const double m = median_of(col);
    for (auto& c : col) c = std::abs(c - m);
    out.median.push_back(m);
    out.mad.push_back(median_of(col));
  }
  return out;
}

}  // namespace owsample
