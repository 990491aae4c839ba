#include "gpchaos/scattering/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gpchaos/error.hpp"

namespace gpchaos::scattering {
namespace {

constexpr double kFitTolerance = 1e-6;
// Inner step keeps kappa * h below this, kappa = sqrt(max v / 2).
constexpr double kStepPerDecay = 0.02;

struct State {
  double u;
  double p;
};

// One RK4 step for u'' = v u / 2 on [r0, r1]. The end-point evaluations use
// one-sided limits from inside the step so a profile that jumps at a node
// keeps full order.
State rk4_step(const PairPotential& v, double r0, double r1, State y) {
  const double h = r1 - r0;
  const double v0 = v(std::nextafter(r0, r1));
  const double vm = v(r0 + 0.5 * h);
  const double v1 = v(std::nextafter(r1, r0));
  const double k1u = y.p, k1p = 0.5 * v0 * y.u;
  const double k2u = y.p + 0.5 * h * k1p, k2p = 0.5 * vm * (y.u + 0.5 * h * k1u);
  const double k3u = y.p + 0.5 * h * k2p, k3p = 0.5 * vm * (y.u + 0.5 * h * k2u);
  const double k4u = y.p + h * k3p, k4p = 0.5 * v1 * (y.u + h * k3u);
  return {y.u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
          y.p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)};
}

double max_on_support(const PairPotential& v) {
  constexpr int kSamples = 4000;
  double m = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = v.range() * i / kSamples;
    m = std::max(m, v(i == kSamples ? std::nextafter(r, 0.0) : r));
  }
  return m;
}

ScatteringSolution solve_impl(const PairPotential& v, double r_max, int n_r, int refinement) {
  const double support = v.range();
  require(std::isfinite(r_max) && r_max > 2.0 * support, ErrorKind::kInvalidArgument,
          "r_max must exceed twice the support radius", "rmax");
  require(n_r >= 100, ErrorKind::kInvalidArgument, "n_r must be at least 100", "nr");

  const double base_step = r_max / n_r;
  const double kappa = std::sqrt(max_on_support(v) / 2.0);
  double inner_step = base_step;
  if (kappa > 0.0) inner_step = std::min(inner_step, kStepPerDecay / kappa);
  inner_step /= refinement;
  int inner = std::max(2, static_cast<int>(std::ceil(support / inner_step)));
  inner += inner % 2;  // even count for Simpson quadrature in s_hat
  const int outer = std::max(2, static_cast<int>(std::ceil((r_max - support) / base_step)));

  ScatteringSolution sol;
  sol.potential = v;
  sol.support_radius = support;
  sol.spacing = support / inner;
  sol.requested_steps = n_r;
  sol.r_max = r_max;
  sol.radius.reserve(static_cast<std::size_t>(inner + outer + 1));
  for (int i = 0; i <= inner; ++i) sol.radius.push_back(support * i / inner);
  for (int i = 1; i <= outer; ++i) sol.radius.push_back(support + (r_max - support) * i / outer);

  const std::size_t count = sol.radius.size();
  sol.u.assign(count, 0.0);
  sol.du.assign(count, 0.0);
  State y{0.0, 1.0};
  sol.du[0] = 1.0;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    y = rk4_step(v, sol.radius[k], sol.radius[k + 1], y);
    sol.u[k + 1] = y.u;
    sol.du[k + 1] = y.p;
    // The ODE is linear; rescale the whole history before it overflows.
    if (std::abs(y.u) > 1e100) {
      for (std::size_t j = 0; j <= k + 1; ++j) {
        sol.u[j] *= 1e-100;
        sol.du[j] *= 1e-100;
      }
      y.u *= 1e-100;
      y.p *= 1e-100;
    }
  }

  // Least-squares line through the tail nodes strictly beyond the support.
  const std::size_t first = static_cast<std::size_t>(inner) + 1;
  const double m = static_cast<double>(count - first);
  double sr = 0, su = 0;
  for (std::size_t k = first; k < count; ++k) {
    sr += sol.radius[k];
    su += sol.u[k];
  }
  const double rbar = sr / m, ubar = su / m;
  double srr = 0, sru = 0;
  for (std::size_t k = first; k < count; ++k) {
    srr += (sol.radius[k] - rbar) * (sol.radius[k] - rbar);
    sru += (sol.radius[k] - rbar) * (sol.u[k] - ubar);
  }
  const double slope = sru / srr;
  const double intercept = ubar - slope * rbar;
  require(slope > 0.0, ErrorKind::kFitResidual, "tail of u is not increasing; potential not repulsive?");
  double ss = 0.0;
  for (std::size_t k = first; k < count; ++k) {
    const double e = sol.u[k] - (slope * sol.radius[k] + intercept);
    ss += e * e;
  }
  sol.fit_residual = std::sqrt(ss / m) / (slope * r_max);
  require(sol.fit_residual <= kFitTolerance, ErrorKind::kFitResidual,
          "linear tail fit residual " + std::to_string(sol.fit_residual) + " exceeds 1e-6", "rmax");

  double a = -intercept / slope;
  if (a < 0.0 && a > -1e-10 * r_max) a = 0.0;
  sol.scattering_length = a;
  for (std::size_t k = 0; k < count; ++k) {
    sol.u[k] /= slope;
    sol.du[k] /= slope;
  }
  return sol;
}

double s_hat_on_grid(const ScatteringSolution& sol) {
  const double a = sol.scattering_length;
  const std::size_t inner = static_cast<std::size_t>(std::lround(sol.support_radius / sol.spacing));
  auto integrand = [&](std::size_t k) {
    const double r = sol.radius[k];
    if (r == 0.0) return 0.0;
    const double w = sol.du[k] * r - sol.u[k];
    return w * w / (r * r);
  };
  // Composite Simpson over the (even) inner nodes.
  double s = integrand(0) + integrand(inner);
  for (std::size_t k = 1; k < inner; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * integrand(k);
  const double inside = s * sol.spacing / 3.0;
  // Beyond the support phi_0 = 1 - a/r exactly, so |phi_0'|^2 r^2 = a^2 / r^2.
  const double outside = a * a / sol.support_radius;
  return (inside + outside) / a;
}

}  // namespace

PairPotential::PairPotential(std::function<double(double)> profile, double range, std::string label)
    : profile_(std::move(profile)), range_(range), label_(std::move(label)) {
  require(static_cast<bool>(profile_), ErrorKind::kInvalidArgument, "pair potential needs a profile");
  require(std::isfinite(range) && range > 0.0, ErrorKind::kInvalidArgument,
          "pair potential range must be positive");
}

PairPotential PairPotential::square_well(double depth, double radius) {
  require(depth >= 0.0, ErrorKind::kInvalidArgument, "pair potential must be nonnegative", "well-depth");
  return PairPotential([depth, radius](double r) { return r < radius ? depth : 0.0; }, radius,
                       "square_well");
}

PairPotential PairPotential::zero() {
  return PairPotential([](double) { return 0.0; }, 1.0, "zero");
}

PairPotential PairPotential::gaussian(double amplitude, double width, double cutoff_widths) {
  require(amplitude >= 0.0 && width > 0.0, ErrorKind::kInvalidArgument,
          "gaussian pair potential needs amplitude >= 0 and width > 0", "pair");
  return PairPotential(
      [amplitude, width](double r) { return amplitude * std::exp(-0.5 * r * r / (width * width)); },
      cutoff_widths * width, "gaussian");
}

PairPotential PairPotential::rescaled(double length) const {
  require(length > 0.0, ErrorKind::kInvalidArgument, "rescaling length must be positive");
  auto inner = profile_;
  const double range = range_;
  return PairPotential(
      [inner, length, range](double r) {
        const double s = r / length;
        return s > range ? 0.0 : inner(s) / (length * length);
      },
      range_ * length, label_);
}

double ScatteringSolution::phi0(double r) const {
  if (r <= 0.0) return du.front();
  if (r >= radius.back()) return 1.0 - scattering_length / r;
  auto it = std::upper_bound(radius.begin(), radius.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - radius.begin());
  const double t = (r - radius[k - 1]) / (radius[k] - radius[k - 1]);
  return ((1.0 - t) * u[k - 1] + t * u[k]) / r;
}

ScatteringSolution solve_zero_energy(const PairPotential& v, double r_max, int n_r) {
  return solve_impl(v, r_max, n_r, 1);
}

double s_hat(const ScatteringSolution& sol, double refine_tol) {
  require(sol.scattering_length > 1e-12 * sol.support_radius, ErrorKind::kZeroScatteringLength,
          "s_hat is undefined for zero scattering length");
  double previous = s_hat_on_grid(sol);
  double current = previous;
  for (int refinement = 2; refinement <= 256; refinement *= 2) {
    const ScatteringSolution finer = solve_impl(sol.potential, sol.r_max, sol.requested_steps, refinement);
    current = s_hat_on_grid(finer);
    if (std::abs(current - previous) < refine_tol) break;
    previous = current;
  }
  require(current > 0.0 && current <= 1.0 + 1e-6, ErrorKind::kInvariant,
          "s_hat = " + std::to_string(current) + " outside (0, 1]", "s_hat");
  return std::min(current, 1.0);
}

double gp_scattering_length(int n_particles, double g) {
  require(n_particles >= 1, ErrorKind::kInvalidArgument, "N must be positive", "N");
  require(g > 0.0, ErrorKind::kInvalidArgument, "g must be positive", "g");
  return g / (4.0 * std::numbers::pi * n_particles);
}

PairPotential gp_scaled_potential(const PairPotential& v1, int n_particles, double g) {
  return v1.rescaled(gp_scattering_length(n_particles, g));
}

PairPotential with_unit_scattering_length(const PairPotential& v, double r_max_factor, int n_r) {
  const ScatteringSolution sol = solve_zero_energy(v, r_max_factor * v.range(), n_r);
  require(sol.scattering_length > 0.0, ErrorKind::kZeroScatteringLength,
          "cannot normalize a potential with zero scattering length");
  return v.rescaled(1.0 / sol.scattering_length);
}

}  // namespace gpchaos::scattering
