#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gpchaos::scattering {

/// Nonnegative, spherically symmetric, compactly supported pair potential v(r).
/// The profile is treated as zero for r > range.
class PairPotential {
 public:
  PairPotential(std::function<double(double)> profile, double range, std::string label = {});

  /// depth on [0, radius), zero beyond.
  static PairPotential square_well(double depth, double radius);
  static PairPotential zero();
  /// amplitude * exp(-r^2 / (2 width^2)), cut off at `cutoff_widths` widths.
  static PairPotential gaussian(double amplitude, double width, double cutoff_widths = 8.0);

  double operator()(double r) const { return r > range_ ? 0.0 : profile_(r); }
  double range() const { return range_; }
  const std::string& label() const { return label_; }

  /// r -> v(r / length) / length^2, support scaled by `length`.
  PairPotential rescaled(double length) const;

 private:
  std::function<double(double)> profile_;
  double range_;
  std::string label_;
};

struct ScatteringSolution {
  std::vector<double> radius;      // nodes on [0, r_max]; the support radius is a node
  std::vector<double> u;           // u(r), normalized so that u ~ (r - a) beyond the support
  std::vector<double> du;          // u'(r)
  double scattering_length = 0.0;  // a
  double support_radius = 0.0;     // R0
  double spacing = 0.0;            // inner step on [0, R0]
  double fit_residual = 0.0;       // RMS relative residual of the linear tail fit
  int requested_steps = 0;
  double r_max = 0.0;
  PairPotential potential = PairPotential::zero();

  /// phi_0(r) = u(r) / r with phi_0 -> 1 at infinity (linear interpolation between nodes).
  double phi0(double r) const;
};

/// Solves -u'' + v u / 2 = 0 with u(0) = 0, u'(0) = 1 by classical RK4 and
/// extracts a from a least-squares fit u = c (r - a) on (R0, r_max].
/// Throws FitResidual when the tail is not linear to 1e-6.
ScatteringSolution solve_zero_energy(const PairPotential& v, double r_max, int n_r);

/// s = \int |grad phi_0|^2 / (4 pi a), refined by step doubling until it
/// changes by less than `refine_tol`. Throws ZeroScatteringLength for a ~ 0.
double s_hat(const ScatteringSolution& sol, double refine_tol = 1e-5);

/// Scattering length fixed by the GP scaling, g / (4 pi N).
double gp_scattering_length(int n_particles, double g);

/// v(r) = v1(r / a) / a^2 with a = g / (4 pi N); v1 must have unit scattering length.
PairPotential gp_scaled_potential(const PairPotential& v1, int n_particles, double g);

/// Rescales v so that its scattering length becomes 1 (v1(r) = a0^2 v(a0 r)).
PairPotential with_unit_scattering_length(const PairPotential& v, double r_max_factor = 8.0,
                                          int n_r = 4000);

}  // namespace gpchaos::scattering
