#include "owsample/benchmarks/registry.hpp"

#include <gtest/gtest.h>

using namespace owsample;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Oakley, Values) {
  EXPECT_DOUBLE_EQ(oakley(vec({0.0, 0.0})), 7.0);
  EXPECT_NEAR(oakley(vec({kPi, 0.0})), 3.0 + kPi, 1e-14);
  EXPECT_NEAR(oakley(vec({-4.0, -4.0})), -2.7936822511113673, 1e-14);
}

TEST(Michalewicz, Values) {
  EXPECT_EQ(michalewicz2(vec({0.0, 0.0})), 0.0);
  EXPECT_NEAR(michalewicz2(vec({kPi / 2, kPi / 2})), -1.0009765625, 1e-14);
  EXPECT_NEAR(michalewicz2(vec({kPi, kPi})), 0.0, 1e-14);
}

TEST(Borehole, MidpointMatchesOneLineEvaluation) {
  const double rw = 0.1, r = 25050.0, Tu = 89335.0, Hu = 1050.0, Tl = 89.55, Hl = 760.0, L = 1400.0, Kw = 10950.0;
  const double oracle = 2 * kPi * Tu * (Hu - Hl) /
                        (std::log(r / rw) * (1 + 2 * L * Tu / (std::log(r / rw) * rw * rw * Kw) + Tu / Tl));
  const auto p = make_borehole();
  const double f = p.evaluate(Vector::Constant(8, 0.5));
  EXPECT_NEAR(f, oracle, 1e-12 * oracle);
  EXPECT_NEAR(f, 70.87291263681897, 1e-12 * f);
}

TEST(Borehole, DoublingTransmissivitiesOnlyActsThroughUpperAquifer) {
  borehole::Inputs p{0.09, 3000.0, 70000.0, 1000.0, 80.0, 750.0, 1500.0, 11000.0};
  borehole::Inputs q = p;
  q.Tu *= 2.0;
  q.Tl *= 2.0;
  const double lr = std::log(p.r / p.rw);
  // Only the numerator T_u and the 2LT_u term change; T_u/T_l is unchanged.
  const double expected = 2 * kPi * q.Tu * (p.Hu - p.Hl) /
                          (lr * (1 + 2 * p.L * q.Tu / (lr * p.rw * p.rw * p.Kw) + p.Tu / p.Tl));
  EXPECT_NEAR(borehole::flow_rate(q), expected, 1e-12 * expected);
}

TEST(Borehole, PriorMatchesRanges) {
  const auto p = make_borehole();
  ASSERT_EQ(p.dim(), 8);
  const auto& m = p.prior->marginals();
  ASSERT_EQ(m.size(), 8u);
  EXPECT_TRUE(std::holds_alternative<NormalMarginal>(m[0].dist));
  EXPECT_TRUE(std::holds_alternative<LogNormalMarginal>(m[1].dist));
  for (std::size_t i = 2; i < 8; ++i) {
    ASSERT_TRUE(std::holds_alternative<UniformMarginal>(m[i].dist));
    EXPECT_DOUBLE_EQ(m[i].offset, borehole::kRanges[i].first);
  }
  EXPECT_DOUBLE_EQ(std::get<NormalMarginal>(m[0].dist).sd, 0.0161812);
  EXPECT_DOUBLE_EQ(std::get<LogNormalMarginal>(m[1].dist).log_mean, 7.71);
  EXPECT_DOUBLE_EQ(std::get<LogNormalMarginal>(m[1].dist).log_sd, 1.0056);
}

TEST(KarhunenLoeve, MercerIdentity) {
  const auto kl = kl_expansion(0.1, 4.0, 25.0, 501, 501);
  for (Eigen::Index t : {50, 250, 450}) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < kl.size(); ++i) s += kl.eigenvalues[i] * kl.modes(i, t) * kl.modes(i, t);
    EXPECT_NEAR(s, 0.1, 1e-3);
  }
}

TEST(KarhunenLoeve, SpectrumAndTwoModeFraction) {
  const auto kl = kl_expansion(0.1, 4.0, 25.0, 501, 501);
  for (Eigen::Index i = 1; i < 20; ++i) EXPECT_GT(kl.eigenvalues[i - 1], kl.eigenvalues[i]);
  EXPECT_GT(kl.eigenvalues[19], 0.0);
  const double fraction = kl.eigenvalues.head(2).sum() / kl.eigenvalues.sum();
  EXPECT_NEAR(fraction, 0.6465, 5e-5);
}

TEST(KarhunenLoeve, ModesOrthonormal) {
  const auto kl = kl_expansion(0.1, 4.0, 25.0, 10, 501);
  const Matrix G = kl.modes * kl.modes.transpose() * kl.dt;
  EXPECT_LT((G - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Oscillator, RestoringForceBranches) {
  const OscillatorParams p;
  EXPECT_DOUBLE_EQ(restoring_force(0.25, p), 0.25);
  EXPECT_DOUBLE_EQ(restoring_force(1.0, p), 0.5);
  EXPECT_NEAR(restoring_force(2.0, p), 0.5125, 1e-15);
  EXPECT_DOUBLE_EQ(restoring_force(-2.0, p), -restoring_force(2.0, p));
}

TEST(Oscillator, ZeroForcingStaysAtRest) {
  const auto p = make_oscillator(2);
  EXPECT_EQ(p.evaluate(Vector::Zero(2)), 0.0);
}

TEST(Oscillator, StepHalvingConverged) {
  const Oscillator osc(kl_expansion(0.1, 4.0, 25.0, 2, 501));
  for (const Vector& x : {vec({1.3, -0.7}), vec({-4.0, 3.5})})
    EXPECT_LT(std::abs(osc(x, 1) - osc(x, 2)), 1e-6);
}

TEST(Burst, OriginAndInvariantPlane) {
  EXPECT_EQ(danger_map(Eigen::Vector3d::Zero()), 0.0);
  EXPECT_EQ(danger_map(Eigen::Vector3d(0.3, -0.2, 0.0)), 0.0);
  const BurstSystem sys;
  EXPECT_EQ(sys.rhs(Eigen::Vector3d::Zero()), Eigen::Vector3d::Zero());
}

TEST(Burst, DummyCoordinatesAreInert) {
  const auto p3 = make_burst_problem(3);
  const auto p10 = make_burst_problem(10);
  Vector x = Vector::Zero(10);
  x.head(3) << 0.4, -0.2, 0.05;
  const double base = p3.evaluate(x.head(3));
  x.tail(7) << 0.1, -0.2, 0.15, 0.0, 0.05, -0.1, 0.2;
  EXPECT_EQ(p10.evaluate(x), base);
}

TEST(Pca, RecoversSampleCovarianceSpectrum) {
  Rng rng = make_rng(7);
  Matrix S(10000, 3);
  for (Eigen::Index k = 0; k < S.rows(); ++k)
    S.row(k) << 2.0 * standard_normal(rng), standard_normal(rng), 0.5 * standard_normal(rng);
  const auto p = pca_reduce(S, 3);
  const Vector want = vec({4.0, 1.0, 0.25});
  EXPECT_LT((p.eigenvalues - want).cwiseQuotient(want).cwiseAbs().maxCoeff(), 0.1);
  for (Eigen::Index k = 0; k < 20; ++k) {
    const Vector s = S.row(k).transpose();
    EXPECT_LT((p.lift(p.project(s)) - s).norm(), 1e-10);
  }
}

TEST(Pca, ProblemPriorIsEigenvalueDiagonal) {
  const auto p = make_burst_problem(3);
  const auto red = burst_reduction();
  EXPECT_TRUE(p.prior->as_gaussian().cov == Matrix(red.eigenvalues.asDiagonal()));
}

TEST(Registry, AllProblemsConstruct) {
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    EXPECT_EQ(p.name, name);
    EXPECT_EQ(p.prior->dim(), p.dim());
    EXPECT_TRUE(std::isfinite(p.evaluate(p.bounds.center())));
  }
  EXPECT_THROW(make_problem("nope"), std::invalid_argument);
}
