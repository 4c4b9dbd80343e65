#include "owsample/verify.hpp"

#include <gtest/gtest.h>

using namespace owsample;

namespace {

KernelHyperparams hyper1(double sf2, double theta, double noise = 0.0) {
  KernelHyperparams h;
  h.signal_variance = sf2;
  h.lengthscales = Vector::Constant(1, theta);
  h.noise_variance = noise;
  return h;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset sin_data(Eigen::Index n) {
  Dataset d;
  d.inputs.resize(n, 1);
  d.outputs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.inputs(i, 0) = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1);
    d.outputs[i] = std::sin(d.inputs(i, 0));
  }
  return d;
}

// k(x,X) K⁻¹ (y - m0) + m0 and the variance by a plain dense solve.
std::pair<double, double> dense_posterior(const GPModel& m, const Vector& x) {
  const Matrix& X = m.data().inputs;
  Matrix K = rbf_kernel_matrix(X, m.hyper());
  K.diagonal().array() += m.hyper().noise_variance + m.jitter();
  const Vector k = rbf_kernel_column(X, x, m.hyper());
  const Vector r = (m.data().outputs.array() - m.prior_mean()).matrix();
  const Eigen::FullPivLU<Matrix> lu(K);
  return {m.prior_mean() + k.dot(lu.solve(r)), m.hyper().signal_variance - k.dot(lu.solve(k))};
}

}  // namespace

TEST(Kernel, ZeroDistanceGivesSignalVariance) {
  KernelHyperparams h;
  h.signal_variance = 3.7;
  h.lengthscales = vec({0.3, 2.0, 5.0});
  const Vector x = vec({0.1, -2.0, 4.0});
  EXPECT_DOUBLE_EQ(rbf_kernel(x, x, h), 3.7);
}

TEST(Kernel, HandValues) {
  EXPECT_NEAR(rbf_kernel(vec({0.0}), vec({std::sqrt(2.0)}), hyper1(1.0, 1.0)), std::exp(-1.0), 1e-15);
  KernelHyperparams h;
  h.signal_variance = 2.0;
  h.lengthscales = vec({1.0, 4.0});
  EXPECT_NEAR(rbf_kernel(vec({0.0, 0.0}), vec({1.0, 2.0}), h), 2.0 * std::exp(-1.0), 1e-15);
}

TEST(Kernel, RejectsBadHyperparameters) {
  EXPECT_THROW(hyper1(1.0, -1.0).validate(), std::invalid_argument);
  EXPECT_THROW(hyper1(0.0, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(rbf_kernel(vec({0.0, 1.0}), vec({1.0}), hyper1(1.0, 1.0)), std::invalid_argument);
}

TEST(Gp, SinglePointInterpolates) {
  Dataset d;
  d.append(vec({0.7}), 2.5);
  FitOptions opt;
  opt.train = false;
  opt.initial = hyper1(1.0, 0.5);
  opt.noise = NoiseSpec::fixed(0.0);
  opt.prior_mean = PriorMeanSpec::zero();
  const auto m = fit_gp(d, opt);
  EXPECT_NEAR(m.posterior_mean(vec({0.7})), 2.5, 1e-12);
}

TEST(Gp, NoiselessSinInterpolation) {
  FitOptions opt;
  opt.noise = NoiseSpec::fixed(0.0);
  const auto d = sin_data(12);
  const auto m = fit_gp(d, opt);
  double worst = 0.0, worst_var = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Vector x = d.inputs.row(i).transpose();
    worst = std::max(worst, std::abs(m.posterior_mean(x) - d.outputs[i]));
    worst_var = std::max(worst_var, m.posterior_var(x));
  }
  EXPECT_LT(worst, 1e-8);
  EXPECT_LT(worst_var, 1e-8);
}

TEST(Gp, RecoversNoiseFromGpDraw) {
  Rng rng = make_rng(11);
  const Eigen::Index n = 200;
  Dataset d;
  d.inputs.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) d.inputs(i, 0) = 10.0 * uniform01(rng);
  Matrix K = rbf_kernel_matrix(d.inputs, hyper1(1.0, 1.0));
  K.diagonal().array() += 1e-8;
  const Matrix L = Eigen::LLT<Matrix>(K).matrixL();
  Vector z(n);
  for (auto& v : z) v = standard_normal(rng);
  d.outputs = L * z;
  for (auto& v : d.outputs) v += 0.1 * standard_normal(rng);
  FitOptions opt;
  opt.seed = 3;
  const auto m = fit_gp(d, opt);
  EXPECT_GT(m.hyper().noise_variance, 0.005);
  EXPECT_LT(m.hyper().noise_variance, 0.02);
}

TEST(Gp, LogMarginalLikelihoodUnitCase) {
  Dataset d;
  d.append(vec({0.0}), 0.0);
  const auto lml = log_marginal_likelihood(hyper1(0.5, 1.0, 0.5), d, 0.0);
  EXPECT_NEAR(lml.value, -0.5 * std::log(2.0 * kPi), 1e-9);
}

TEST(Gp, LogMarginalLikelihoodGradient) {
  Rng rng = make_rng(5);
  Dataset d;
  d.inputs.resize(10, 2);
  d.outputs.resize(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    d.inputs.row(i) = verify::random_vec(2, rng, -2.0, 2.0).transpose();
    d.outputs[i] = std::sin(d.inputs(i, 0)) * std::cos(d.inputs(i, 1));
  }
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = verify::random_hyper(2, rng, 0.05);
    // Parameterized by logs of (σ_f², θ_1..θ_d, σ_ε²).
    Vector p(4);
    p << std::log(h.signal_variance), std::log(h.lengthscales[0]), std::log(h.lengthscales[1]),
        std::log(h.noise_variance);
    auto f = [&](const Vector& q) {
      KernelHyperparams k;
      k.signal_variance = std::exp(q[0]);
      k.lengthscales = q.segment(1, 2).array().exp();
      k.noise_variance = std::exp(q[3]);
      return log_marginal_likelihood(k, d, 0.1).value;
    };
    const auto g = log_marginal_likelihood(h, d, 0.1).grad;
    const Vector fd = verify::central_diff(f, p, Vector::Constant(4, 1e-5));
    EXPECT_LT(verify::grad_err(g, fd), 1e-5) << "trial " << trial;
  }
}

TEST(Gp, ScalingSignalAndNoiseKeepsOptimumRatios) {
  // On a 1-D problem, a brute grid over (θ, σ_ε²/σ_f²) picks the same ratios
  // when σ_f², σ_ε² and the residuals are scaled together.
  Rng rng = make_rng(17);
  Dataset d;
  for (int i = 0; i < 15; ++i) {
    const double x = 6.0 * uniform01(rng);
    d.append(vec({x}), std::sin(x) + 0.1 * standard_normal(rng));
  }
  Dataset scaled = d;
  scaled.outputs *= std::sqrt(2.0);
  auto argmax = [](const Dataset& data, double sf2) {
    double best = -std::numeric_limits<double>::infinity();
    std::pair<double, double> at{};
    for (double lt = -1.0; lt <= 1.0; lt += 0.1)
      for (double lr = -5.0; lr <= 0.0; lr += 0.25) {
        const auto v = log_marginal_likelihood(hyper1(sf2, std::exp(lt), sf2 * std::exp(lr)), data, 0.0).value;
        if (v > best) {
          best = v;
          at = {lt, lr};
        }
      }
    return at;
  };
  const auto a = argmax(d, 1.0);
  const auto b = argmax(scaled, 2.0);
  EXPECT_NEAR(a.first, b.first, 1e-12);
  EXPECT_NEAR(a.second, b.second, 1e-12);
}

TEST(Gp, FarFieldReturnsPrior) {
  Rng rng = make_rng(2);
  const auto m = verify::random_model(2, 8, rng);
  const Vector far = Vector::Constant(2, 20.0 * m.hyper().lengthscales.cwiseSqrt().maxCoeff() + 2.0);
  EXPECT_NEAR(m.posterior_mean(far), m.prior_mean(), 1e-6);
  EXPECT_NEAR(m.posterior_var(far), m.hyper().signal_variance, 1e-6 * m.hyper().signal_variance);
}

TEST(Gp, MatchesDenseSolve) {
  Dataset d;
  d.append(vec({-1.0}), 0.3);
  d.append(vec({0.2}), -0.4);
  d.append(vec({1.5}), 1.1);
  const GPModel m(d, hyper1(1.3, 0.8, 0.01), 0.2);
  for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
    const auto [mu, var] = dense_posterior(m, vec({x}));
    EXPECT_NEAR(m.posterior_mean(vec({x})), mu, 1e-12);
    EXPECT_NEAR(m.posterior_var(vec({x})), var, 1e-12);
  }
}

TEST(Gp, TrainingPointHasZeroVariance) {
  Dataset d;
  d.append(vec({-1.0}), 0.3);
  d.append(vec({0.5}), -0.4);
  d.append(vec({2.0}), 1.1);
  const GPModel m(d, hyper1(1.0, 1.0), 0.0);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(m.posterior_var(d.inputs.row(i).transpose()), 0.0, 1e-8);
}

TEST(Gp, CovarianceDiagonalAndPriorLimit) {
  Rng rng = make_rng(9);
  const auto m = verify::random_model(2, 6, rng);
  const Vector x = verify::random_vec(2, rng, -2.0, 2.0);
  EXPECT_EQ(m.posterior_cov(x, x), m.posterior_var(x));

  Dataset d;
  d.append(vec({30.0}), 1.0);
  const GPModel lone(d, hyper1(1.0, 1.0), 0.0);
  const Vector a = vec({0.0}), b = vec({0.6});
  EXPECT_NEAR(lone.posterior_cov(a, b), rbf_kernel(a, b, lone.hyper()), 1e-6);
}

TEST(Gp, GhostPointIdentity) {
  const auto r = verify::ghost_point_identity(101, 50);
  EXPECT_TRUE(r.passed) << r.failing_case << " max error " << r.max_error;
}

TEST(Gp, MeanGradientMatchesDifferences) {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = verify::random_model(2, 5, rng);
    const Vector x = verify::random_vec(2, rng, -2.0, 2.0);
    const Vector fd = verify::central_diff([&](const Vector& y) { return m.posterior_mean(y); }, x,
                                           Vector::Constant(2, 1e-5));
    EXPECT_LT((m.posterior_mean_grad(x) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST(Gp, MeanGradientVanishesBySymmetry) {
  Dataset d;
  for (double x : {0.5, 1.2, 2.0}) {
    d.append(vec({x}), std::cos(x));
    d.append(vec({-x}), std::cos(x));
  }
  const GPModel m(d, hyper1(1.0, 0.7, 1e-4), 0.0);
  EXPECT_NEAR(m.posterior_mean_grad(vec({0.0}))[0], 0.0, 1e-10);
}

TEST(Gp, MeanGradientVanishesAtLocalMaximum) {
  Dataset d;
  for (double x : {-2.0, -1.0, -0.3, 0.4, 1.1, 2.0}) d.append(vec({x}), std::exp(-(x - 0.2) * (x - 0.2)));
  const GPModel m(d, hyper1(1.0, 0.8, 0.0), 0.0);
  double lo = -0.5, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (m.posterior_mean(vec({a})) < m.posterior_mean(vec({b})))
      lo = a;
    else
      hi = b;
  }
  const double xmax = 0.5 * (lo + hi);
  EXPECT_LT(std::abs(m.posterior_mean_grad(vec({xmax}))[0]), 1e-6);
}

TEST(Gp, VarianceGradientMatchesDifferences) {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = verify::random_model(2, 6, rng);
    const Vector x = verify::random_vec(2, rng, -2.0, 2.0);
    const Vector fd = verify::central_diff([&](const Vector& y) { return m.posterior_var(y); }, x,
                                           Vector::Constant(2, 1e-5));
    const auto vg = m.posterior_var_grad(x);
    EXPECT_LT(verify::grad_err(vg.grad, fd, 1e-8 * m.hyper().signal_variance), 1e-6) << "trial " << trial;
  }
}

TEST(Khat, ClosedForms) {
  const auto v = khat(vec({0.3}), vec({0.3}), hyper1(1.0, 1.0));
  EXPECT_NEAR(v.value, std::sqrt(kPi), 1e-12);
  KernelHyperparams h;
  h.signal_variance = 1.7;
  h.lengthscales = vec({0.4, 2.5});
  const Vector x = vec({1.0, -1.0});
  EXPECT_NEAR(khat(x, x, h).value, std::pow(1.7, 2) * kPi * std::sqrt(0.4 * 2.5), 1e-12);
}

TEST(Khat, MatchesQuadrature) {
  for (const auto& r : verify::khat_checks(7, 50)) EXPECT_TRUE(r.passed) << r.name << ": " << r.failing_case;
}

TEST(KhatGmm, HandValue) {
  GaussianComponent c{vec({0.0}), Matrix::Identity(1, 1)};
  EXPECT_NEAR(khat_gmm(vec({0.0}), vec({0.0}), hyper1(1.0, 1.0), c).value, 1.0 / std::sqrt(3.0), 1e-14);
}

TEST(KhatGmm, NarrowComponentCollapsesToPointMass) {
  const double eps = 1e-10;
  GaussianComponent c{vec({0.4}), Matrix::Constant(1, 1, eps)};
  const auto h = hyper1(1.3, 0.7);
  const Vector a = vec({-0.2}), b = vec({0.9});
  const double point_mass = rbf_kernel(a, c.mean, h) * rbf_kernel(c.mean, b, h);
  EXPECT_NEAR(khat_gmm(a, b, h, c).value, point_mass, 1e-8 * point_mass);
  // Quadrature against a narrow but resolvable Gaussian.
  GaussianComponent wide{vec({0.4}), Matrix::Constant(1, 1, 1e-4)};
  const double q = verify::integrate_1d(
      [&](double t) {
        const Vector y = vec({t});
        return rbf_kernel(a, y, h) * rbf_kernel(y, b, h) * std::exp(-0.5 * (t - 0.4) * (t - 0.4) / 1e-4) /
               std::sqrt(2.0 * kPi * 1e-4);
      },
      0.4 - 0.2, 0.4 + 0.2, 1e-13);
  EXPECT_NEAR(khat_gmm(a, b, h, wide).value, q, 1e-6 * q);
}

TEST(KhatGmm, MatchesQuadrature) {
  for (const auto& r : verify::khat_gmm_checks(8, 50)) EXPECT_TRUE(r.passed) << r.name << ": " << r.failing_case;
}
