#pragma once

#include <span>

#include "gpchaos/core/grid.hpp"

namespace gpchaos::core {

/// What to do where a density drops below the floor eps = relative_floor * max(rho).
enum class FloorPolicy {
  kClamp,   ///< divide by max(rho, eps)
  kZero,    ///< drift set to zero below the floor
  kReject,  ///< throw DensityFloor
};

struct FloorOptions {
  double relative_floor = 1e-12;
  FloorPolicy policy = FloorPolicy::kClamp;
};

/// Second-order gradient: central differences inside, three-point one-sided
/// differences on the first and last node of each axis.
VectorField gradient(const ScalarField& field);

/// Nelson drift (1/2) grad(rho) / rho.
VectorField grad_log_density(const ScalarField& rho, const FloorOptions& options = {});

/// Fourth-order five-point negative Laplacian restricted to the axes
/// [first_axis, first_axis + axis_count). Boundary nodes are Dirichlet nodes:
/// their output is zero and they read as zero. Values outside the box are zero.
/// `out` may not alias `in`.
void apply_negative_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out,
                              int first_axis, int axis_count);

inline void apply_negative_laplacian(const Grid& grid, std::span<const double> in,
                                     std::span<double> out) {
  apply_negative_laplacian(grid, in, out, 0, grid.dim());
}

/// Largest eigenvalue bound of the per-axis five-point operator, (16/3)/h^2.
double negative_laplacian_axis_bound(const Grid& grid);

/// Maximum over interior nodes of the second difference of log(rho) along any
/// axis; <= 0 for a log-concave density. Nodes below the floor are skipped.
double log_concavity_defect(const ScalarField& rho, double relative_floor = 1e-8);

}  // namespace gpchaos::core
