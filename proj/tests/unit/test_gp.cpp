#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/error.hpp"
#include "gpchaos/gp/gp.hpp"
#include "oracles/analytic.hpp"

using namespace gpchaos;
using core::Grid;
using core::ScalarField;

namespace {

gp::GpProblem harmonic(int d, double g, double half_width, int n) {
  return gp::GpProblem{gp::Trap::harmonic(), g, d, Grid(d, half_width, n), std::nullopt};
}

ScalarField oscillator_ground_state(const Grid& grid) {
  // pi^{-d/4} exp(-r^2/2), renormalized on the nodes
  std::vector<double> v(grid.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x);
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    v[i] = grid.on_boundary(i) ? 0.0 : std::exp(-0.5 * r2);
  }
  double s = 0.0;
  for (double c : v) s += c * c;
  const double scale = 1.0 / std::sqrt(s * grid.cell_volume());
  for (double& c : v) c *= scale;
  return ScalarField(grid, v);
}

double phi4(const gp::GpSolution& sol) {
  std::vector<double> q(sol.phi.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::pow(sol.phi[i], 4);
  return core::integrate_nodes(sol.phi.grid(), q);
}

}  // namespace

TEST_CASE("gp_energy on the oscillator ground state") {
  const auto problem = harmonic(3, 0.0, 6.0, 64);
  const ScalarField phi = oscillator_ground_state(problem.grid);
  const auto e0 = gp::gp_energy(phi, problem);
  CHECK(std::abs(e0.kinetic - 1.5) < 1e-4);
  CHECK(std::abs(e0.trap - 1.5) < 1e-4);
  CHECK(std::abs(e0.total - 3.0) < 1e-4);
  CHECK(e0.interaction == 0.0);

  const auto with_g = harmonic(3, 1.0, 6.0, 64);
  const auto e1 = gp::gp_energy(phi, with_g);
  // \int phi^4 = pi^{-3} (pi/2)^{3/2} = (2 pi)^{-3/2}
  CHECK(std::abs(e1.interaction - std::pow(2.0 * std::numbers::pi, -1.5)) < 1e-4);
  CHECK(std::abs(e1.total - (e1.kinetic + e1.trap + e1.interaction)) < 1e-12);

  std::vector<double> doubled(phi.values().begin(), phi.values().end());
  for (double& v : doubled) v *= 2.0;
  CHECK_THROWS_AS(gp::gp_energy(ScalarField(problem.grid, doubled), problem), Error);
}

TEST_CASE("1D harmonic, g = 0") {
  const auto problem = harmonic(1, 0.0, 8.0, 161);
  const auto sol = gp::minimize_gp(problem, {.tol = 1e-9});
  // fourth-order discretization error at h = 0.1
  CHECK(std::abs(sol.energy.total - 1.0) < 1e-5);
  CHECK(std::abs(sol.lambda - 1.0) < 1e-5);
  CHECK(std::abs(sol.energy.kinetic - sol.energy.trap) < 1e-5);
  CHECK(sol.residual < 1e-9);
  CHECK(core::node_inner_product(problem.grid, sol.phi.values(), sol.phi.values()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < sol.phi.size(); ++i)
    if (!problem.grid.on_boundary(i)) CHECK(sol.phi[i] > 0.0);
}

TEST_CASE("chemical potential identity lambda - E = g int phi^4") {
  for (double g : {0.0, 1.0, 10.0, 100.0}) {
    const auto sol = gp::minimize_gp(harmonic(1, g, 8.0, 161), {.tol = 1e-10});
    const double lhs = sol.lambda - sol.energy.total;
    const double rhs = g * phi4(sol);
    CAPTURE(g);
    CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(std::abs(sol.lambda), 1e-12));
  }
}

TEST_CASE("2D harmonic virial and initialization independence") {
  const auto problem = harmonic(2, 0.0, 6.0, 49);
  const auto a = gp::minimize_gp(problem, {.tol = 1e-9, .start = gp::GpStart::kGaussian});
  const auto b = gp::minimize_gp(problem, {.tol = 1e-9, .start = gp::GpStart::kUniform});
  CHECK(std::abs(a.energy.total - 2.0) < 1e-3);
  CHECK(std::abs(a.energy.kinetic - a.energy.trap) < 1e-3);
  std::vector<double> diff(a.phi.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.phi[i] - b.phi[i];
  CHECK(std::sqrt(core::node_inner_product(problem.grid, diff, diff)) < 1e-6);
}

TEST_CASE("initialization independence with interaction") {
  const auto problem = harmonic(1, 5.0, 8.0, 161);
  const auto a = gp::minimize_gp(problem, {.tol = 1e-10, .start = gp::GpStart::kGaussian});
  const auto b = gp::minimize_gp(problem, {.tol = 1e-10, .start = gp::GpStart::kUniform});
  std::vector<double> diff(a.phi.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.phi[i] - b.phi[i];
  CHECK(std::sqrt(core::node_inner_product(problem.grid, diff, diff)) < 1e-6);
}

TEST_CASE("GP energy is monotone in g") {
  double previous = -1.0;
  for (double g : {0.0, 0.5, 2.0, 8.0}) {
    const auto sol = gp::minimize_gp(harmonic(1, g, 8.0, 161), {.tol = 1e-9});
    CHECK(sol.energy.total >= previous);
    previous = sol.energy.total;
  }
}

TEST_CASE("Thomas-Fermi limit, d = 1, g = 200") {
  const auto problem = harmonic(1, 200.0, 10.0, 401);
  const auto sol = gp::minimize_gp(problem, {.tol = 1e-8});
  const ScalarField rho = sol.density();
  std::vector<double> diff(rho.size());
  std::vector<double> x(1);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    problem.grid.point(i, x);
    diff[i] = std::abs(rho[i] - oracle::thomas_fermi_density_1d(x[0], 200.0));
  }
  CHECK(core::integrate_nodes(problem.grid, diff) < 0.02);
}

TEST_CASE("gp_drift") {
  SUBCASE("3D harmonic gives -r") {
    const auto problem = harmonic(3, 0.0, 5.0, 33);
    const auto sol = gp::minimize_gp(problem, {.tol = 1e-8});
    const auto u = gp::gp_drift(sol);
    std::vector<double> x(3);
    double worst = 0.0;
    for (std::size_t i = 0; i < problem.grid.size(); ++i) {
      problem.grid.point(i, x);
      if (std::abs(x[0]) > 1.5 || std::abs(x[1]) > 1.5 || std::abs(x[2]) > 1.5) continue;
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(u.at(i, c) + x[static_cast<std::size_t>(c)]));
    }
    CHECK(worst < 0.1);
  }
  SUBCASE("symmetric trap: zero drift at the origin, zero mean drift") {
    const auto problem = harmonic(1, 3.0, 8.0, 161);
    const auto sol = gp::minimize_gp(problem, {.tol = 1e-10});
    const auto u = gp::gp_drift(sol);
    CHECK(std::abs(u.at(80, 0)) < 1e-8);
    const ScalarField rho = sol.density();
    std::vector<double> ur(rho.size());
    for (std::size_t i = 0; i < ur.size(); ++i) ur[i] = u.at(i, 0) * rho[i];
    CHECK(std::abs(core::integrate_nodes(problem.grid, ur)) < 1e-8);
  }
}

TEST_CASE("Hartree kernel term") {
  auto problem = harmonic(1, 0.0, 6.0, 97);
  problem.kernel = scattering::PairPotential::gaussian(2.0, 0.5);
  const auto sol = gp::minimize_gp(problem, {.tol = 1e-9});
  // lambda - E equals the pair energy (1/2) \int\int w rho rho.
  CHECK(std::abs((sol.lambda - sol.energy.total) - sol.energy.interaction) < 1e-8);
  CHECK(sol.energy.total > 1.0);
}

TEST_CASE("validation and failures") {
  CHECK_THROWS_AS(gp::minimize_gp(harmonic(1, -1.0, 8.0, 65)), Error);
  CHECK_THROWS_AS(gp::minimize_gp(harmonic(1, 0.0, 8.0, 65), {.step = -1.0}), Error);
  try {
    gp::minimize_gp(harmonic(1, 1.0, 8.0, 65), {.tol = 1e-12, .max_iter = 3});
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.last_residual() > 0.0);
  }
  try {
    const auto p = harmonic(1, 0.0, 8.0, 65);
    gp::minimize_gp(p, {.step = 1.0});
    FAIL("expected NonMonotone");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonMonotone);
  }
  CHECK(gp::Trap::from_name("quartic").name == "quartic");
  CHECK_THROWS_AS(gp::Trap::from_name("box"), Error);
}
