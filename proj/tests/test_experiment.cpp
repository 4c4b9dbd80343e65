#include "owsample/experiment.hpp"
#include "owsample/verify.hpp"

#include <gtest/gtest.h>

using namespace owsample;

namespace {

double normal_pdf(double y, double m = 0.0) { return std::exp(-0.5 * (y - m) * (y - m)) / std::sqrt(2.0 * kPi); }

BlackBoxProblem identity_problem() {
  return {"identity", BoxBounds::symmetric(Vector::Constant(1, 8.0)),
          std::make_shared<const InputPrior>(InputPrior::standard_normal(1)),
          [](const Vector& x) { return x[0]; }};
}

ExperimentConfig small_config(std::string problem, AcquisitionKind kind, int n_iter) {
  ExperimentConfig c;
  c.problem = std::move(problem);
  c.acquisition = kind;
  c.n_iter = n_iter;
  c.mc_samples = 10000;
  c.replicates = 1;
  c.gp_restarts = 2;
  c.acq_restarts = 3;
  c.acq_probes = 64;
  c.noise_variance = 1e-4;
  return c;
}

}  // namespace

TEST(GroundTruth, LinearPushforwardIsStandardNormal) {
  Rng rng = make_rng(1);
  const auto t = ground_truth_pdf(identity_problem(), 100000, rng);
  double worst = 0.0;
  for (double y = -4.0; y <= 4.0; y += 0.01) worst = std::max(worst, std::abs(t.density.value(y) - normal_pdf(y)));
  EXPECT_LT(worst, 0.02);
  EXPECT_NEAR(t.density.integral(), 1.0, 1e-3);
}

TEST(GroundTruth, OscillatorOutputsAreHeavyTailed) {
  Rng rng = make_rng(2);
  const auto t = ground_truth_pdf(make_oscillator(2), 20000, rng);
  const Eigen::ArrayXd c = t.outputs.array() - t.outputs.mean();
  const double m2 = c.square().mean(), m4 = c.square().square().mean();
  EXPECT_GT(m4 / (m2 * m2) - 3.0, 0.0);
}

TEST(GroundTruth, Deterministic) {
  Rng a = make_rng(3), b = make_rng(3);
  const auto p = make_oakley();
  const auto ta = ground_truth_pdf(p, 5000, a), tb = ground_truth_pdf(p, 5000, b);
  EXPECT_TRUE(ta.inputs == tb.inputs);
  EXPECT_TRUE(ta.log_pdf == tb.log_pdf);
}

TEST(LogPdfError, IdenticalSamplesGiveZero) {
  Rng rng = make_rng(4);
  const auto t = ground_truth_pdf(make_oakley(), 20000, rng);
  EXPECT_LT(log_pdf_error(t.outputs, t), 1e-10);
}

TEST(LogPdfError, UnitOffsetMatchesQuadrature) {
  Rng rng = make_rng(5);
  const auto t = ground_truth_pdf(identity_problem(), 100000, rng);
  const double err = log_pdf_error(Vector(t.outputs.array() + 1.0), t);
  // Exact densities over the floored range the truth reports.
  const auto& pf = t.density.density();
  Eigen::Index lo = 0, hi = pf.size() - 1;
  while (pf[lo] <= t.floor) ++lo;
  while (pf[hi] <= t.floor) --hi;
  const double want = verify::integrate_1d(
      [&](double y) {
        return std::abs(std::log(std::max(normal_pdf(y, 1.0), t.floor)) - std::log(std::max(normal_pdf(y), t.floor)));
      },
      t.grid().at(lo), t.grid().at(hi), 1e-10);
  EXPECT_NEAR(err, want, 0.02 * want);
}

TEST(LogPdfError, InvariantToSampleOrder) {
  Rng rng = make_rng(6);
  const auto t = ground_truth_pdf(make_oakley(), 20000, rng);
  Vector mu = t.outputs.array() * 1.1 - 0.3;
  const double e1 = log_pdf_error(mu, t);
  std::reverse(mu.begin(), mu.end());
  EXPECT_NEAR(log_pdf_error(mu, t), e1, 1e-9 * e1);
}

TEST(Sequential, ZeroIterationsKeepsInitialDesign) {
  const auto cfg = small_config("oakley", AcquisitionKind::US, 0);
  const auto setup = prepare_experiment(cfg);
  const auto r = run_sequential(cfg, setup, 0);
  EXPECT_EQ(r.visited.rows(), 3);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.evaluations, 3);
}

TEST(Sequential, BookkeepingAndDeterminism) {
  for (auto kind : kAllAcquisitions) {
    auto cfg = small_config("oakley", kind, 4);
    cfg.n_init = 5;
    const auto setup = prepare_experiment(cfg);
    const auto a = run_sequential(cfg, setup, 0);
    EXPECT_EQ(a.visited.rows(), 9) << to_string(kind);
    EXPECT_EQ(a.errors.size(), 5u);
    EXPECT_EQ(a.wall_time.size(), 4u);
    EXPECT_EQ(a.evaluations, 9);
    for (std::size_t i = 1; i < a.cumulative_min.size(); ++i) EXPECT_LE(a.cumulative_min[i], a.cumulative_min[i - 1]);
    const auto b = run_sequential(cfg, setup, 0);
    EXPECT_TRUE(a.visited == b.visited);
    EXPECT_EQ(a.errors, b.errors);
  }
}

TEST(Sequential, WeightedIvrImprovesOnOscillator) {
  ExperimentConfig cfg;
  cfg.problem = "oscillator-m2";
  cfg.acquisition = AcquisitionKind::IVR_LW;
  cfg.n_iter = 60;
  cfg.noise_variance = 0.0;
  cfg.replicates = 10;
  cfg.gp_restarts = 4;
  cfg.seed = 11;
  const auto setup = prepare_experiment(cfg);
  const auto res = run_replicates(cfg, setup);
  ASSERT_TRUE(res.failures.empty()) << res.failures.front();
  int improved = 0;
  for (const auto& r : res.records) improved += r->errors.back() < r->errors.front();
  EXPECT_GE(improved, 9);
}

TEST(LhsBaseline, BudgetAndLength) {
  auto cfg = small_config("oakley", AcquisitionKind::US, 6);
  cfg.baseline = Baseline::lhs;
  const auto setup = prepare_experiment(cfg);
  const auto r = run_lhs_baseline(cfg, setup, 0);
  const int N = 6, n0 = 3;
  EXPECT_EQ(r.evaluations, N * n0 + N * (N + 1) / 2);
  EXPECT_EQ(r.errors.size(), 6u);
  EXPECT_EQ(r.first_iteration, 1);
}

TEST(Aggregate, Definitions) {
  ExperimentRecord a;
  a.cumulative_min = {3.0, 2.0, 1.0};
  const auto one = aggregate({a});
  EXPECT_EQ(one.median, a.cumulative_min);
  EXPECT_EQ(one.mad, std::vector<double>(3, 0.0));

  ExperimentRecord b = a, c = a;
  b.cumulative_min = {1.0, 1.0, 1.0};
  c.cumulative_min = {2.0, 0.5, 0.5};
  const auto abc = aggregate({a, b, c});
  EXPECT_EQ(abc.median[0], 2.0);
  EXPECT_EQ(abc.mad[0], 1.0);
  const auto cba = aggregate({c, b, a});
  EXPECT_EQ(abc.median, cba.median);
  EXPECT_EQ(abc.mad, cba.mad);

  ExperimentRecord shorter;
  shorter.cumulative_min = {1.0};
  EXPECT_THROW(aggregate({a, shorter}), std::invalid_argument);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.problem = "oakley";
  EXPECT_NO_THROW(c.validate());
  c.n_iter = -1;
  try {
    c.validate();
    FAIL() << "negative n_iter accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "n_iter");
  }
}
