#pragma once

// Black-box problem descriptor and the closed-form test functions.

#include "owsample/core.hpp"
#include "owsample/prior.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace owsample {

struct BlackBoxProblem {
  std::string name;
  BoxBounds bounds;
  std::shared_ptr<const InputPrior> prior;
  std::function<double(const Vector&)> evaluate;  // deterministic, noise-free

  Eigen::Index dim() const { return bounds.dim(); }
};

inline double oakley(const Vector& x) {
  detail::require_dim(x.size(), 2, "oakley");
  return 5.0 + x[0] + x[1] + 2.0 * std::cos(x[0]) + 2.0 * std::sin(x[1]);
}

inline double michalewicz2(const Vector& x) {
  detail::require_dim(x.size(), 2, "michalewicz2");
  return -std::sin(x[0]) * std::pow(std::sin(x[0] * x[0] / kPi), 20) -
         std::sin(x[1]) * std::pow(std::sin(2.0 * x[1] * x[1] / kPi), 20);
}

inline BlackBoxProblem make_oakley() {
  return {"oakley", BoxBounds::symmetric(Vector::Constant(2, 4.0)),
          std::make_shared<const InputPrior>(InputPrior::standard_normal(2)), oakley};
}

inline BlackBoxProblem make_michalewicz2() {
  return {"michalewicz2", BoxBounds(Vector::Zero(2), Vector::Constant(2, kPi)),
          std::make_shared<const InputPrior>(
              InputPrior::gaussian(Vector::Constant(2, kPi / 2), 0.1 * Matrix::Identity(2, 2))),
          michalewicz2};
}

namespace borehole {

// Physical input order: r_w, r, T_u, H_u, T_l, H_l, L, K_w.
struct Inputs {
  double rw, r, Tu, Hu, Tl, Hl, L, Kw;
};

inline constexpr std::array<std::pair<double, double>, 8> kRanges{{{0.05, 0.15},
                                                                  {100.0, 50000.0},
                                                                  {63070.0, 115600.0},
                                                                  {990.0, 1110.0},
                                                                  {63.1, 116.0},
                                                                  {700.0, 820.0},
                                                                  {1120.0, 1680.0},
                                                                  {9855.0, 12045.0}}};

inline double flow_rate(const Inputs& p) {
  detail::require(p.rw > 0.0 && p.Tu > 0.0 && p.Tl > 0.0 && p.L > 0.0 && p.Kw > 0.0,
                  "borehole: physical inputs must be positive");
  detail::require(p.r > p.rw, "borehole: r must exceed r_w");
  const double lr = std::log(p.r / p.rw);
  return 2.0 * kPi * p.Tu * (p.Hu - p.Hl) /
         (lr * (1.0 + 2.0 * p.L * p.Tu / (lr * p.rw * p.rw * p.Kw) + p.Tu / p.Tl));
}

inline Inputs to_physical(const Vector& u) {
  detail::require_dim(u.size(), 8, "borehole");
  std::array<double, 8> v{};
  for (std::size_t i = 0; i < 8; ++i)
    v[i] = kRanges[i].first + (kRanges[i].second - kRanges[i].first) * u[static_cast<Eigen::Index>(i)];
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

inline InputPrior unit_prior() {
  std::vector<Marginal> m;
  for (std::size_t i = 0; i < 8; ++i) {
    const double lo = kRanges[i].first, w = kRanges[i].second - kRanges[i].first;
    if (i == 0)
      m.push_back({NormalMarginal{0.1, 0.0161812}, lo, w});
    else if (i == 1)
      m.push_back({LogNormalMarginal{7.71, 1.0056}, lo, w});
    else
      m.push_back({UniformMarginal{kRanges[i].first, kRanges[i].second}, lo, w});
  }
  return InputPrior::product(std::move(m));
}

}  // namespace borehole

inline BlackBoxProblem make_borehole() {
  return {"borehole", BoxBounds(Vector::Zero(8), Vector::Ones(8)),
          std::make_shared<const InputPrior>(borehole::unit_prior()),
          [](const Vector& u) { return borehole::flow_rate(borehole::to_physical(u)); }};
}

}  // namespace owsample
