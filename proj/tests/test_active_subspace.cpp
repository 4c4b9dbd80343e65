#include "owsample/experiment.hpp"

#include <gtest/gtest.h>

using namespace owsample;

namespace {

BlackBoxProblem gaussian_problem(std::string name, Eigen::Index d, std::function<double(const Vector&)> f) {
  return {std::move(name), BoxBounds::symmetric(Vector::Constant(d, 4.0)),
          std::make_shared<const InputPrior>(InputPrior::standard_normal(d)), std::move(f)};
}

Vector ranks(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  Vector r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
  return r;
}

double spearman(const Vector& a, const Vector& b) {
  const Vector ra = ranks(a), rb = ranks(b);
  const Vector ca = ra.array() - ra.mean(), cb = rb.array() - rb.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST(ActiveSubspace, SampleCountAndBudget) {
  EXPECT_EQ(active_subspace_sample_count(2, 2.0, 10), 9);
  ActiveSubspaceOptions opt;
  opt.q = 1;
  Rng rng = make_rng(1);
  const auto p = gaussian_problem("sum", 10, [](const Vector& x) { return x.sum(); });
  EXPECT_EQ(build_active_subspace(p, opt, rng).evaluations, 99);
}

TEST(ActiveSubspace, LinearFunctionAligns) {
  const Vector c = (Vector(5) << 1.0, -2.0, 0.5, 0.0, 3.0).finished();
  const auto p = gaussian_problem("linear", 5, [c](const Vector& x) { return c.dot(x); });
  ActiveSubspaceOptions opt;
  opt.q = 1;
  Rng rng = make_rng(2);
  const auto as = build_active_subspace(p, opt, rng);
  EXPECT_GT(std::abs(as.basis.col(0).dot(c.normalized())), 1.0 - 1e-8);
}

TEST(ActiveSubspace, SingleActiveCoordinate) {
  const auto p = gaussian_problem("ridge", 6, [](const Vector& x) { return std::sin(x[0]) + 0.1 * x[0] * x[0]; });
  ActiveSubspaceOptions opt;
  opt.q = 1;
  Rng rng = make_rng(3);
  const auto as = build_active_subspace(p, opt, rng);
  EXPECT_LT(std::acos(std::min(1.0, std::abs(as.basis(0, 0)))), 1e-3);
}

TEST(ActiveSubspace, LinearSurrogateIsExact) {
  // Along (1, 0, -1, 0) every lifted design point stays inside the box, so
  // clipping never bends the ridge.
  const Vector c = (Vector(4) << 1.5, 0.0, -1.5, 0.0).finished();
  const auto p = gaussian_problem("linear", 4, [c](const Vector& x) { return 1.0 + c.dot(x); });
  ActiveSubspaceOptions opt;
  opt.q = 1;
  Rng rng = make_rng(4);
  const auto as = build_active_subspace(p, opt, rng);
  const auto sur = as_surrogate(as, p, 12, rng);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = p.prior->sample_in_box(p.bounds, rng);
    const double f = p.evaluate(x);
    worst = std::max(worst, std::abs(sur(x) - f) / std::max(1.0, std::abs(f)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(ActiveSubspace, FullRankMatchesPlainGp) {
  const auto p = gaussian_problem("smooth", 3, [](const Vector& x) {
    return std::sin(x[0]) + 0.5 * x[1] * x[1] - 0.3 * x[0] * x[2];
  });
  ActiveSubspaceOptions opt;
  opt.q = 3;
  Rng rng = make_rng(5);
  const auto as = build_active_subspace(p, opt, rng);
  const auto sur = as_surrogate(as, p, 120, rng);
  Dataset d;
  d.inputs = lhs_design(120, p.bounds, rng);
  d.outputs.resize(120);
  for (Eigen::Index i = 0; i < 120; ++i) d.outputs[i] = p.evaluate(d.inputs.row(i).transpose());
  FitOptions fit;
  fit.seed = 9;
  const auto gp = fit_gp(d, fit);
  const Matrix X = p.prior->sample_matrix(500, rng, &p.bounds);
  EXPECT_GT(spearman(sur.predict_batch(X), gp.posterior_mean_batch(X)), 0.95);
}

TEST(ActiveSubspace, TruncationErrorPlateaus) {
  Vector a(10);
  for (Eigen::Index i = 0; i < 10; ++i) a[i] = 1.0 / (1.0 + 0.3 * static_cast<double>(i));
  const auto p = gaussian_problem("all-dims", 10, [a](const Vector& x) {
    return (a.array() * x.array().sin()).sum() + 0.2 * x.squaredNorm();
  });
  Rng truth_rng = make_rng(6);
  const auto truth = ground_truth_pdf(p, 20000, truth_rng);
  ActiveSubspaceOptions opt;
  opt.q = 2;
  Rng rng = make_rng(7);
  const auto as = build_active_subspace(p, opt, rng);
  std::vector<double> errors;
  for (Eigen::Index n : {8, 16, 32, 64}) {
    Rng srng = make_rng(8, static_cast<std::uint64_t>(n));
    const auto sur = as_surrogate(as, p, n, srng);
    errors.push_back(log_pdf_error(sur.predict_batch(truth.inputs), truth));
  }
  EXPECT_GT(errors.back(), 0.95 * errors[errors.size() - 2]);
}
