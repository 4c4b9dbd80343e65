#pragma once

// One-dimensional Gaussian KDE on a uniform grid: linear binning onto a
// refined grid followed by an FFT convolution, plus a smooth interpolant
// for off-grid lookups and derivatives.

#include "owsample/core.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <vector>

namespace owsample {

struct UniformGrid {
  double lo = 0.0;
  double step = 1.0;
  Eigen::Index size = 0;

  static UniformGrid spanning(double lo, double hi, Eigen::Index n) {
    detail::require(n >= 2, "UniformGrid: need at least two nodes");
    detail::require(hi > lo, "UniformGrid: hi must exceed lo");
    return {lo, (hi - lo) / static_cast<double>(n - 1), n};
  }

  double at(Eigen::Index i) const { return lo + step * static_cast<double>(i); }
  double hi() const { return at(size - 1); }
  Vector nodes() const {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = at(i);
    return v;
  }
};

inline Vector kde_direct(const Vector& samples, const UniformGrid& grid, double bandwidth) {
  detail::require(samples.size() > 0, "kde_direct: empty samples");
  detail::require(bandwidth > 0.0, "kde_direct: bandwidth must be > 0");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * kPi));
  Vector out(grid.size);
  for (Eigen::Index g = 0; g < grid.size; ++g) {
    const double y = grid.at(g);
    out[g] = norm * ((samples.array() - y) / bandwidth).square().unaryExpr([](double z) {
      return std::exp(-0.5 * z);
    }).sum();
  }
  return out;
}

// Samples should lie inside the grid; mass outside it is dropped.
inline Vector kde_fft(const Vector& samples, const UniformGrid& grid, double bandwidth,
                      int refine = 16) {
  detail::require(samples.size() > 0, "kde_fft: empty samples");
  detail::require(bandwidth > 0.0, "kde_fft: bandwidth must be > 0");
  detail::require(refine >= 1, "kde_fft: refine must be >= 1");
  const Eigen::Index nf = static_cast<Eigen::Index>(refine) * (grid.size - 1) + 1;
  const double df = grid.step / refine;

  std::size_t len = 1;
  while (len < static_cast<std::size_t>(2 * nf)) len <<= 1;

  std::vector<double> counts(len, 0.0);
  for (Eigen::Index k = 0; k < samples.size(); ++k) {
    const double pos = (samples[k] - grid.lo) / df;
    if (!(pos >= 0.0) || pos > static_cast<double>(nf - 1)) continue;
    const auto i = std::min(static_cast<Eigen::Index>(pos), nf - 2);
    const double frac = pos - static_cast<double>(i);
    counts[static_cast<std::size_t>(i)] += 1.0 - frac;
    counts[static_cast<std::size_t>(i + 1)] += frac;
  }

  std::vector<double> kern(len, 0.0);
  for (Eigen::Index j = 0; j < nf; ++j) {
    const double z = static_cast<double>(j) * df / bandwidth;
    const double v = std::exp(-0.5 * z * z);
    kern[static_cast<std::size_t>(j)] = v;
    if (j > 0) kern[len - static_cast<std::size_t>(j)] = v;
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fk;
  fft.fwd(fa, counts);
  fft.fwd(fk, kern);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fk[i];
  std::vector<double> conv;
  fft.inv(conv, fa);

  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * kPi));
  Vector out(grid.size);
  for (Eigen::Index g = 0; g < grid.size; ++g)
    out[g] = std::max(0.0, norm * conv[static_cast<std::size_t>(g * refine)]);
  return out;
}

inline double scott_bandwidth(const Vector& samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 2) return 0.0;
  const double m = samples.mean();
  const double sd = std::sqrt((samples.array() - m).square().sum() / (n - 1.0));
  return sd * std::pow(n, -0.2);
}

// Density sampled on a uniform grid with a C¹ cubic Hermite interpolant
// (node slopes from central differences). Outside the grid the edge value
// is held and the derivative is zero.
class OutputDensity {
 public:
  OutputDensity() = default;
  OutputDensity(UniformGrid grid, Vector density, double bandwidth)
      : grid_(grid), density_(std::move(density)), bandwidth_(bandwidth) {
    detail::require(density_.size() == grid_.size, "OutputDensity: size mismatch");
    slopes_.resize(grid_.size);
    const Eigen::Index n = grid_.size;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == 0)
        slopes_[i] = (density_[1] - density_[0]) / grid_.step;
      else if (i == n - 1)
        slopes_[i] = (density_[n - 1] - density_[n - 2]) / grid_.step;
      else
        slopes_[i] = (density_[i + 1] - density_[i - 1]) / (2.0 * grid_.step);
    }
    max_ = density_.maxCoeff();
  }

  const UniformGrid& grid() const { return grid_; }
  const Vector& density() const { return density_; }
  double bandwidth() const { return bandwidth_; }
  double max() const { return max_; }

  double integral() const {
    return grid_.step * (density_.sum() - 0.5 * (density_[0] + density_[grid_.size - 1]));
  }

  double value(double y) const {
    Eigen::Index i;
    double t;
    if (!locate(y, i, t)) return y < grid_.lo ? density_[0] : density_[grid_.size - 1];
    const double t2 = t * t, t3 = t2 * t;
    const double h = grid_.step;
    return (2 * t3 - 3 * t2 + 1) * density_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] +
           (-2 * t3 + 3 * t2) * density_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
  }

  double derivative(double y) const {
    Eigen::Index i;
    double t;
    if (!locate(y, i, t)) return 0.0;
    const double t2 = t * t;
    const double h = grid_.step;
    return ((6 * t2 - 6 * t) * density_[i] + (3 * t2 - 4 * t + 1) * h * slopes_[i] +
            (-6 * t2 + 6 * t) * density_[i + 1] + (3 * t2 - 2 * t) * h * slopes_[i + 1]) /
           h;
  }

 private:
  bool locate(double y, Eigen::Index& i, double& t) const {
    const double pos = (y - grid_.lo) / grid_.step;
    if (!(pos >= 0.0) || pos > static_cast<double>(grid_.size - 1)) return false;
    i = std::min(static_cast<Eigen::Index>(pos), grid_.size - 2);
    t = pos - static_cast<double>(i);
    return true;
  }

  UniformGrid grid_;
  Vector density_;
  Vector slopes_;
  double bandwidth_ = 0.0;
  double max_ = 0.0;
};

inline constexpr Eigen::Index kDefaultGridSize = 1024;

// Scott bandwidth floored at span/G; grid spans the samples ± 3 bandwidths.
inline OutputDensity kde_density(const Vector& samples, Eigen::Index grid_size = kDefaultGridSize) {
  detail::require(samples.size() > 0, "kde_density: empty samples");
  detail::require(samples.allFinite(), "kde_density: non-finite samples");
  const double lo = samples.minCoeff();
  const double hi = samples.maxCoeff();
  const double range = hi - lo;
  // Smallest h with h >= (range + 6h)/G.
  const double floor_span = range / static_cast<double>(grid_size - 6);
  const double floor_abs = 1e-8 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  const double h = std::max({scott_bandwidth(samples), floor_span, floor_abs});
  const auto grid = UniformGrid::spanning(lo - 3.0 * h, hi + 3.0 * h, grid_size);
  return OutputDensity(grid, kde_fft(samples, grid, h), h);
}

}  // namespace owsample
