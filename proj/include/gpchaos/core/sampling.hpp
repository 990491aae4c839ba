#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gpchaos/core/grid.hpp"

namespace gpchaos::core {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream_id` of a run seeded with `seed`.
/// Depends only on (seed, stream_id), so per-path streams are schedule independent.
Rng make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Standard normal variate. Box-Muller on the raw 64-bit output keeps the
/// result identical across standard library implementations.
double standard_normal(Rng& rng);
double uniform01(Rng& rng);

/// Multilinear interpolation of grid data at an arbitrary point (clamped to the box).
class Interpolator {
 public:
  explicit Interpolator(const Grid& grid) : grid_(grid) {}
  /// Writes `components` interpolated values for node data stored interleaved.
  void evaluate(std::span<const double> node_values, int components, std::span<const double> x,
                std::span<double> out) const;
  double evaluate(std::span<const double> node_values, std::span<const double> x) const;

 private:
  Grid grid_;
};

/// Draws points from the continuous density obtained by multilinear
/// interpolation of a grid density. One-dimensional grids use exact inverse
/// CDF sampling; higher dimensions use rejection from the support box.
class DensitySampler {
 public:
  explicit DensitySampler(const ScalarField& rho);

  int dim() const { return grid_.dim(); }
  void draw(Rng& rng, std::span<double> out) const;
  /// count points, point i drawn from make_stream(seed, i).
  SampleSet draw_many(std::uint64_t seed, std::size_t count) const;

  /// CDF of the interpolated density (1D grids only).
  double cdf(double x) const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // 1D: mass left of node i
  std::vector<double> box_low_;
  std::vector<double> box_high_;
  double value_bound_ = 0.0;
};

}  // namespace gpchaos::core
