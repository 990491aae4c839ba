#include "gpchaos/core/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::core {
namespace {

double axis_derivative(const Grid& g, std::span<const double> f, std::size_t i, int axis) {
  const int n = g.points_per_axis();
  const int idx = g.index_along(i, axis);
  const std::size_t s = g.stride(axis);
  const double inv2h = 0.5 / g.spacing();
  if (idx == 0) return (-3.0 * f[i] + 4.0 * f[i + s] - f[i + 2 * s]) * inv2h;
  if (idx == n - 1) return (3.0 * f[i] - 4.0 * f[i - s] + f[i - 2 * s]) * inv2h;
  return (f[i + s] - f[i - s]) * inv2h;
}

}  // namespace

VectorField gradient(const ScalarField& field) {
  const Grid& g = field.grid();
  const int dim = g.dim();
  std::vector<double> out(g.size() * static_cast<std::size_t>(dim));
  parallel_for(g.size(), [&](std::size_t i) {
    for (int a = 0; a < dim; ++a) {
      out[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] =
          axis_derivative(g, field.values(), i, a);
    }
  });
  return VectorField(g, dim, std::move(out));
}

VectorField grad_log_density(const ScalarField& rho, const FloorOptions& options) {
  const Grid& g = rho.grid();
  const double floor = options.relative_floor * rho.max();
  if (options.policy == FloorPolicy::kReject) {
    require(rho.min() >= floor, ErrorKind::kDensityFloor,
            "density drops below the floor " + std::to_string(floor) + " and clamping is disabled");
  }
  VectorField grad = gradient(rho);
  const int dim = g.dim();
  std::vector<double> out(g.size() * static_cast<std::size_t>(dim));
  parallel_for(g.size(), [&](std::size_t i) {
    const double r = rho[i];
    for (int a = 0; a < dim; ++a) {
      double v;
      if (r >= floor && r > 0.0) {
        v = 0.5 * grad.at(i, a) / r;
      } else if (options.policy == FloorPolicy::kZero) {
        v = 0.0;
      } else {
        v = floor > 0.0 ? 0.5 * grad.at(i, a) / floor : 0.0;
      }
      out[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] = v;
    }
  });
  return VectorField(g, dim, std::move(out));
}

void apply_negative_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out,
                              int first_axis, int axis_count) {
  require(in.size() == grid.size() && out.size() == grid.size(), ErrorKind::kDimensionMismatch,
          "stencil buffers do not match grid");
  require(first_axis >= 0 && axis_count >= 0 && first_axis + axis_count <= grid.dim(),
          ErrorKind::kDimensionMismatch, "stencil axes out of range");
  const int n = grid.points_per_axis();
  const double c = 1.0 / (12.0 * grid.spacing() * grid.spacing());
  parallel_for(grid.size(), [&](std::size_t i) {
    if (grid.on_boundary(i)) {
      out[i] = 0.0;
      return;
    }
    double acc = 0.0;
    for (int a = first_axis; a < first_axis + axis_count; ++a) {
      const int idx = grid.index_along(i, a);
      const std::size_t s = grid.stride(a);
      // Neighbours at +-1 are interior or Dirichlet nodes (stored as zero by
      // convention of the callers); +-2 may fall outside the box.
      const double m1 = idx - 1 >= 1 ? in[i - s] : 0.0;
      const double p1 = idx + 1 <= n - 2 ? in[i + s] : 0.0;
      const double m2 = idx - 2 >= 1 ? in[i - 2 * s] : 0.0;
      const double p2 = idx + 2 <= n - 2 ? in[i + 2 * s] : 0.0;
      acc += (m2 - 16.0 * m1 + 30.0 * in[i] - 16.0 * p1 + p2) * c;
    }
    out[i] = acc;
  });
}

double negative_laplacian_axis_bound(const Grid& grid) {
  return (16.0 / 3.0) / (grid.spacing() * grid.spacing());
}

double log_concavity_defect(const ScalarField& rho, double relative_floor) {
  const Grid& g = rho.grid();
  const double floor = relative_floor * rho.max();
  const int n = g.points_per_axis();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int a = 0; a < g.dim(); ++a) {
      const int idx = g.index_along(i, a);
      if (idx == 0 || idx == n - 1) continue;
      const std::size_t s = g.stride(a);
      const double lo = rho[i - s], mid = rho[i], hi = rho[i + s];
      if (std::min({lo, mid, hi}) <= floor) continue;
      worst = std::max(worst, (std::log(hi) - 2.0 * std::log(mid) + std::log(lo)) * inv_h2);
    }
  }
  return worst;
}

}  // namespace gpchaos::core
