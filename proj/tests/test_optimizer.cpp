#include "owsample/verify.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace owsample;

namespace {

struct Concave {
  Vector c;
  double value(const Vector& x) const { return -(x - c).squaredNorm(); }
  ValueGrad value_and_grad(const Vector& x) const { return {value(x), -2.0 * (x - c)}; }
};

}  // namespace

TEST(Lhs, SinglePointInsideBounds) {
  Rng rng = make_rng(1);
  const BoxBounds box(Vector::Constant(3, -1.0), Vector::Constant(3, 2.0));
  const Matrix X = lhs_design(1, box, rng);
  ASSERT_EQ(X.rows(), 1);
  EXPECT_TRUE(box.contains(X.row(0).transpose()));
}

TEST(Lhs, Stratified) {
  Rng rng = make_rng(2);
  const BoxBounds box(Vector::Zero(2), Vector::Constant(2, 10.0));
  const Matrix X = lhs_design(10, box, rng);
  for (Eigen::Index j = 0; j < 2; ++j) {
    std::set<int> bins;
    for (Eigen::Index i = 0; i < 10; ++i) bins.insert(static_cast<int>(std::floor(X(i, j))));
    EXPECT_EQ(bins.size(), 10u);
  }
}

TEST(Lhs, Deterministic) {
  const BoxBounds box(Vector::Zero(4), Vector::Ones(4));
  Rng a = make_rng(3), b = make_rng(3);
  EXPECT_TRUE(lhs_design(20, box, a) == lhs_design(20, box, b));
}

TEST(Maximize, UncertaintyPicksBoundary) {
  Dataset d;
  d.append(Vector::Constant(1, 0.1), 1.0);
  KernelHyperparams h;
  h.lengthscales = Vector::Constant(1, 1.0);
  AcquisitionContext ctx;
  ctx.model = std::make_shared<const GPModel>(d, h, 0.0);
  const Acquisition us(AcquisitionKind::US, ctx);
  Rng rng = make_rng(4);
  const BoxBounds box = BoxBounds::symmetric(Vector::Constant(1, 3.0));
  const auto best = maximize_acquisition(us, box, rng);
  EXPECT_EQ(std::abs(best.x[0]), 3.0);
}

TEST(Maximize, RecoversConcaveOptimum) {
  Rng rng = make_rng(5);
  const Concave f{(Vector(3) << 0.3, -1.2, 2.5).finished()};
  const auto best = maximize_acquisition(f, BoxBounds::symmetric(Vector::Constant(3, 4.0)), rng);
  EXPECT_LT((best.x - f.c).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Maximize, BeatsDenseRandomProbes) {
  Rng rng = make_rng(6);
  const auto problem = make_oscillator(2);
  const auto st = verify::oscillator_state(problem, 12, rng, 20000);
  const Acquisition acq(AcquisitionKind::IVR_LW, st.context());
  const auto best = maximize_acquisition(acq, st.bounds, rng);
  double probe = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 10000; ++k) probe = std::max(probe, acq.value(uniform_in_box(st.bounds, rng)));
  EXPECT_GE(best.value, probe - 1e-9);
}
