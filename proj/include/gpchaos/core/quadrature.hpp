#pragma once

#include <span>
#include <vector>

#include "gpchaos/core/grid.hpp"

namespace gpchaos::core {

/// Trapezoidal-rule integral of the field over its grid box.
double integrate(const ScalarField& field);

/// Trapezoidal integral of an arbitrary node-wise expression.
double integrate_nodes(const Grid& grid, std::span<const double> values);

/// Node-sum inner product h^dim * sum(a * b); boundary-consistent with the
/// Dirichlet stencils used by the eigensolvers.
double node_inner_product(const Grid& grid, std::span<const double> a, std::span<const double> b);

/// k-th absolute moment  \int |x|^k rho  (Euclidean norm over all axes).
double moment(const ScalarField& rho, double k);
/// Sample average of |x|^k.
double moment(const SampleSet& samples, double k);

/// Share of the k-th moment carried by the outer shell of the box
/// (nodes with some |x_i| > shell_fraction * L). Near 0 when the box captures
/// the moment, near 1 when it does not.
double moment_tail_fraction(const ScalarField& rho, double k, double shell_fraction = 0.9);

/// Marginal on the first n_kept particles of a joint density over N*d axes.
ScalarField marginalize(const ScalarField& rho_joint, int n_kept, int d);

/// Marginal on an arbitrary sorted subset of particle indices.
ScalarField marginalize_particles(const ScalarField& rho_joint, std::span<const int> kept, int d);

/// rho(x_1) * ... * rho(x_n) on the n*d-dimensional grid.
ScalarField tensor_power(const ScalarField& rho, int n);

/// Product of two densities on the concatenated grid.
ScalarField tensor_product(const ScalarField& a, const ScalarField& b);

/// Joint field with particle blocks permuted: out(x_{perm[0]}, ...) = rho(x_0, ...).
ScalarField permute_particles(const ScalarField& rho_joint, std::span<const int> perm, int d);

}  // namespace gpchaos::core
