#pragma once

// Shared vocabulary types for the owsample library: Eigen aliases, the
// error hierarchy, box bounds and seeded random streams.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace owsample {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.83787706640934548356;

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// K could not be factorized even after the maximum jitter.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

// Every hyperparameter optimizer start failed.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, double best_value)
      : Error(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

// Non-finite state inside an ODE integration.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(concat(what, ": dimension mismatch (got ", got,
                                       ", expected ", want, ")"));
}

}  // namespace detail

// Axis-aligned search box.
struct BoxBounds {
  Vector lo;
  Vector hi;

  BoxBounds() = default;
  BoxBounds(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    validate();
  }

  static BoxBounds symmetric(const Vector& half_width) {
    return BoxBounds(-half_width, half_width);
  }

  Eigen::Index dim() const { return lo.size(); }
  Vector width() const { return hi - lo; }
  Vector center() const { return 0.5 * (lo + hi); }
  double volume() const { return width().prod(); }

  bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  Vector project(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

  void validate() const {
    detail::require(lo.size() == hi.size() && lo.size() > 0,
                    "BoxBounds: lo and hi must be non-empty and equal length");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      detail::require(std::isfinite(lo[i]) && std::isfinite(hi[i]),
                      "BoxBounds: bounds must be finite");
      detail::require(lo[i] < hi[i], "BoxBounds: lo < hi required componentwise");
    }
  }
};

// splitmix64 finalizer; used to derive independent stream seeds from one
// base seed so that every replicate, restart and sub-step is reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// Draws a fresh child seed from a parent stream.
inline std::uint64_t child_seed(Rng& rng) { return rng(); }

inline double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller; avoids the implementation-defined std::normal_distribution so
  // streams are identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline Vector uniform_in_box(const BoxBounds& box, Rng& rng) {
  Vector x(box.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = box.lo[i] + uniform01(rng) * (box.hi[i] - box.lo[i]);
  return x;
}

}  // namespace owsample
