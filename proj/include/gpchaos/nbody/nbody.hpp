#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpchaos/core/derivatives.hpp"
#include "gpchaos/core/grid.hpp"
#include "gpchaos/gp/gp.hpp"
#include "gpchaos/scattering/scattering.hpp"

namespace gpchaos::nbody {

inline constexpr int kDefaultJointDimCap = 6;

/// H_N = sum_i (-Lap_i + V(r_i)) + sum_{i<j} v(|r_i - r_j|) on a joint grid of
/// dimension N*d. Every axis uses the same one-particle discretization.
struct NBodyProblem {
  int n_particles = 1;
  int d = 1;
  gp::Trap trap = gp::Trap::harmonic();
  std::optional<scattering::PairPotential> pair;  // nullopt: no interaction
  core::Grid grid;
  int joint_dim_cap = kDefaultJointDimCap;
  std::string scaling_label = "none";

  /// Builds the joint grid from a one-particle extent and resolution.
  static NBodyProblem make(int n_particles, int d, gp::Trap trap,
                           std::optional<scattering::PairPotential> pair, double half_width,
                           int points_per_axis, int joint_dim_cap = kDefaultJointDimCap);

  /// The d-dimensional grid of a single particle.
  core::Grid particle_grid() const { return grid.with_dim(d); }
};

enum class Solver {
  kLocallyOptimal,  // Rayleigh-Ritz on span{x, residual, previous direction}
  kImaginaryTime,   // x <- normalize(x - step * H x)
};

struct GroundStateOptions {
  double tol = 1e-12;           ///< stop when the Rayleigh quotient changes by less than this
  double residual_tol = 1e-6;   ///< and ||H psi - E psi|| is below this
  int max_iter = 200000;
  Solver solver = Solver::kLocallyOptimal;
  double step = 0.0;            ///< imaginary-time step; 0 selects 0.9 / ||H|| bound
  bool precondition = true;     ///< diagonal preconditioning of the residual (locally optimal solver)
  bool symmetrize = true;
};

struct NBodyGroundState {
  int n_particles = 1;
  int d = 1;
  core::ScalarField psi;   ///< real, nonnegative, unit node norm
  core::ScalarField rho;   ///< psi^2 as a density
  double energy = 0.0;     ///< <psi, H psi>
  double residual = 0.0;
  int iterations = 0;

  double per_particle_energy() const { return energy / n_particles; }
  /// b^N = (1/2) grad rho_N / rho_N on the joint grid.
  core::VectorField drift(const core::FloorOptions& floor = {}) const;
};

/// U(x) = sum_i V(r_i) + sum_{i<j} v(|r_i - r_j|) at every joint node.
std::vector<double> joint_potential(const NBodyProblem& problem);

/// <psi, H_N psi> for a unit-norm psi, recomputed from scratch.
double rayleigh_quotient(const NBodyProblem& problem, const core::ScalarField& psi);

NBodyGroundState ground_state(const NBodyProblem& problem, const GroundStateOptions& options = {});

struct EnergyComponents {
  double kinetic = 0.0;      ///< <psi, -Lap_1 psi>
  double trap = 0.0;         ///< \int V(r_1) rho_N
  double interaction = 0.0;  ///< (1/2) sum_{j>=2} \int v(|r_1 - r_j|) rho_N

  double sum() const { return kinetic + trap + interaction; }
};

EnergyComponents energy_components(const NBodyGroundState& state, const NBodyProblem& problem);

/// \int 1_{F} |b_1^N - u_GP(r_1)|^2 rho_N over the joint grid, where F drops
/// every node whose r_1 lies within `radius` of some r_j, j >= 2.
double localized_drift_distance(const NBodyGroundState& state, const gp::GpSolution& gp, double radius,
                                const core::FloorOptions& floor = {});

/// Ball radius N^{-1/3 - delta} of the three-dimensional exclusion set.
double exclusion_radius(int n_particles, double delta);

}  // namespace gpchaos::nbody
