#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "gpchaos/core/derivatives.hpp"
#include "gpchaos/core/grid.hpp"
#include "gpchaos/scattering/scattering.hpp"

namespace gpchaos::gp {

/// External trapping potential V(r) >= 0 on R^d.
struct Trap {
  std::function<double(std::span<const double>)> potential;
  std::string name;
  /// Frequency of the harmonic trap that best matches V near the origin; sets
  /// the width of the Gaussian start.
  double harmonic_hint = 1.0;

  double operator()(std::span<const double> x) const { return potential(x); }

  /// V = |r|^2
  static Trap harmonic();
  /// V = |r|^4
  static Trap quartic();
  static Trap from_name(const std::string& name);
};

struct GpProblem {
  Trap trap;
  double g = 0.0;  ///< contact coupling of g \int |phi|^4
  int d = 1;
  core::Grid grid;
  /// Optional finite-range pair kernel w: adds (1/2) \int\int w(|x-y|) rho(x) rho(y)
  /// to the functional. This is the mean-field limit of an N-body system with
  /// pair potential w/N.
  std::optional<scattering::PairPotential> kernel;
};

struct EnergyBreakdown {
  double kinetic = 0.0;
  double trap = 0.0;
  double interaction = 0.0;
  double total = 0.0;
};

struct GpSolution {
  core::ScalarField phi;  ///< positive on the interior, zero on boundary nodes, unit L2 norm
  double lambda = 0.0;    ///< chemical potential <phi, (-Lap + V + 2g phi^2 + w*rho) phi>
  EnergyBreakdown energy;
  double residual = 0.0;  ///< || -Lap phi + V phi + 2g phi^3 + (w*rho) phi - lambda phi ||_2
  int iterations = 0;

  core::ScalarField density() const;
};

enum class GpStart { kGaussian, kUniform };

struct GpOptions {
  double step = 0.0;  ///< 0 selects 0.9 / (upper bound of the linearized operator)
  double tol = 1e-8;
  int max_iter = 200000;
  GpStart start = GpStart::kGaussian;
  /// Abort with NonMonotone if the energy rises by more than this (relative) in one step.
  double monotonicity_slack = 1e-12;
};

/// GP functional \int |grad phi|^2 + V phi^2 + g phi^4 (+ kernel term), hbar = 2m = 1.
/// The kinetic term is the discrete Dirichlet form <phi, -Lap_h phi>.
EnergyBreakdown gp_energy(const core::ScalarField& phi, const GpProblem& problem);

/// Normalized gradient flow phi <- normalize(phi - step * (-Lap + V + 2 g phi^2) phi).
/// Throws NoConvergence carrying the last residual.
GpSolution minimize_gp(const GpProblem& problem, const GpOptions& options = {});

/// u_GP = (1/2) grad(rho_GP) / rho_GP.
core::VectorField gp_drift(const GpSolution& sol, const core::FloorOptions& floor = {});

}  // namespace gpchaos::gp
