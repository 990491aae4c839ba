#include <cmath>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "doctest.h"
#include "gpchaos/core/derivatives.hpp"
#include "gpchaos/core/field_io.hpp"
#include "gpchaos/core/grid.hpp"
#include "gpchaos/core/parallel.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/core/sampling.hpp"
#include "gpchaos/error.hpp"
#include "oracles/analytic.hpp"

using namespace gpchaos;
using core::Grid;
using core::ScalarField;

namespace {

ScalarField gaussian_1d(const Grid& g, double mean = 0.0, double sigma = 1.0) {
  return ScalarField::sample(g, [&](std::span<const double> x) { return oracle::normal_pdf(x[0], mean, sigma); })
      .normalized();
}

ScalarField exp_minus_r2(const Grid& g) {
  return ScalarField::sample(g, [](std::span<const double> x) {
           double r2 = 0.0;
           for (double v : x) r2 += v * v;
           return std::exp(-r2);
         })
      .normalized();
}

double max_interior_error(const core::VectorField& f, int comp, const std::function<double(std::span<const double>)>& exact,
                          double inner) {
  const Grid& g = f.grid();
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.point(i, x);
    bool inside = true;
    for (double v : x) inside = inside && std::abs(v) <= inner;
    if (!inside) continue;
    worst = std::max(worst, std::abs(f.at(i, comp) - exact(x)));
  }
  return worst;
}

}  // namespace

TEST_CASE("grid geometry") {
  Grid g(2, 1.0, 11);
  CHECK(g.spacing() == doctest::Approx(0.2));
  CHECK(g.size() == 121);
  int idx[2];
  g.unravel(37, idx);
  CHECK(idx[0] == 3);
  CHECK(idx[1] == 4);
  CHECK(g.ravel(idx) == 37);
  CHECK(g.on_boundary(0));
  CHECK_FALSE(g.on_boundary(37));
  CHECK_THROWS_AS(Grid(1, 1.0, 7), Error);
  CHECK_THROWS_AS(Grid(10, 1.0, 64), Error);
}

TEST_CASE("integrate: normalization, zero field, Gaussian second moment") {
  Grid g(1, 8.0, 257);
  const ScalarField rho = gaussian_1d(g);
  CHECK(core::integrate(rho) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(core::integrate(ScalarField::zeros(g)) == 0.0);
  const ScalarField second = ScalarField::sample(g, [](std::span<const double> x) {
    return x[0] * x[0] * oracle::normal_pdf(x[0]);
  });
  CHECK(std::abs(core::integrate(second) - 1.0) < 1e-6);
}

TEST_CASE("integrate is linear") {
  Grid g(2, 3.0, 33);
  const ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return std::sin(x[0]) + x[1] * x[1]; });
  const ScalarField h = ScalarField::sample(g, [](std::span<const double> x) { return std::exp(-x[0] * x[1]); });
  std::vector<double> combo(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) combo[i] = 2.5 * f[i] - 0.75 * h[i];
  const double lhs = core::integrate(ScalarField(g, combo));
  const double rhs = 2.5 * core::integrate(f) - 0.75 * core::integrate(h);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("density flag validation") {
  Grid g(1, 1.0, 11);
  CHECK_THROWS_AS(ScalarField::density(g, std::vector<double>(11, 1.0)), Error);
  CHECK_NOTHROW(ScalarField::density(g, std::vector<double>(11, 0.5)));
  std::vector<double> bad(11, 0.5);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(ScalarField(g, bad), Error);
}

TEST_CASE("moments") {
  Grid g(1, 8.0, 257);
  const ScalarField rho = gaussian_1d(g);
  CHECK(std::abs(core::moment(rho, 2.0) - 1.0) < 1e-6);
  CHECK(std::abs(core::moment(rho, 4.0) - 3.0) < 1e-5);
  CHECK(core::moment(rho, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  const core::SampleSet origin(2, {0.0, 0.0, 0.0, 0.0});
  CHECK(core::moment(origin, 3.0) == 0.0);
  CHECK(core::moment(origin, 0.0) == 1.0);
  CHECK(core::moment_tail_fraction(rho, 2.0) < 1e-6);
}

TEST_CASE("grad_log_density on exp(-x^2)") {
  SUBCASE("converges at second order") {
    double errors[2];
    int k = 0;
    for (int n : {101, 201}) {
      Grid g(1, 5.0, n);
      const auto drift = core::grad_log_density(exp_minus_r2(g));
      errors[k++] = max_interior_error(drift, 0, [](std::span<const double> x) { return -x[0]; }, 3.0);
    }
    const double order = std::log2(errors[0] / errors[1]);
    CHECK(order >= 1.8);
    CHECK(errors[1] < 0.04);
  }
  SUBCASE("uniform density gives zero drift") {
    Grid g(2, 1.0, 9);
    const auto drift = core::grad_log_density(ScalarField::constant(g, 0.25));
    for (double v : drift.values()) CHECK(std::abs(v) < 1e-14);
  }
  SUBCASE("3D Gaussian gives -r") {
    Grid g(3, 5.0, 81);
    const ScalarField rho = ScalarField::sample(g, [](std::span<const double> x) {
                              return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
                            }).normalized();
    const auto drift = core::grad_log_density(rho);
    for (int c = 0; c < 3; ++c) {
      CHECK(max_interior_error(drift, c, [c](std::span<const double> x) { return -x[static_cast<std::size_t>(c)]; },
                               2.0) < 0.06);
    }
  }
  SUBCASE("floor policies") {
    Grid g(1, 5.0, 21);
    std::vector<double> v(21, 0.0);
    for (int i = 5; i < 16; ++i) v[static_cast<std::size_t>(i)] = 1.0;
    const ScalarField rho = ScalarField(g, v).normalized();
    CHECK_THROWS_AS(core::grad_log_density(rho, {1e-12, core::FloorPolicy::kReject}), Error);
    const auto zero = core::grad_log_density(rho, {1e-12, core::FloorPolicy::kZero});
    CHECK(zero.at(0, 0) == 0.0);
    const auto clamp = core::grad_log_density(rho, {1e-12, core::FloorPolicy::kClamp});
    CHECK(std::isfinite(clamp.at(4, 0)));
  }
}

TEST_CASE("negative Laplacian is fourth order on a Gaussian") {
  double errors[2];
  int k = 0;
  for (int n : {81, 161}) {
    Grid g(1, 8.0, n);
    std::vector<double> f(g.size()), out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::exp(-g.coordinate(static_cast<int>(i)) * g.coordinate(static_cast<int>(i)));
    core::apply_negative_laplacian(g, f, out);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < g.size(); ++i) {
      const double x = g.coordinate(static_cast<int>(i));
      worst = std::max(worst, std::abs(out[i] - (2.0 - 4.0 * x * x) * f[i]));
    }
    errors[k++] = worst;
  }
  CHECK(std::log2(errors[0] / errors[1]) > 3.7);
}

TEST_CASE("marginalize") {
  Grid g1(1, 4.0, 33);
  const ScalarField rho = gaussian_1d(g1, 0.3, 0.8);
  const ScalarField joint = core::tensor_power(rho, 2);
  CHECK(core::integrate(joint) == doctest::Approx(1.0).epsilon(1e-10));
  const ScalarField m = core::marginalize(joint, 1, 1);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(m[i] - rho[i]) < 1e-10);
  const ScalarField all = core::marginalize(joint, 2, 1);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == doctest::Approx(joint[i]).epsilon(1e-14));
  CHECK_THROWS_AS(core::marginalize(joint, 3, 1), Error);

  SUBCASE("symmetric two-body density has equal marginals") {
    Grid g2(2, 4.0, 33);
    const ScalarField sym = ScalarField::sample(g2, [](std::span<const double> x) {
                              return std::exp(-x[0] * x[0] - x[1] * x[1] - 0.5 * std::exp(-(x[0] - x[1]) * (x[0] - x[1])));
                            }).normalized();
    const int first[] = {0};
    const int second[] = {1};
    const ScalarField a = core::marginalize_particles(sym, first, 1);
    const ScalarField b = core::marginalize_particles(sym, second, 1);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
    CHECK(core::integrate(a) == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("three particles in 2D keep normalization") {
    Grid g(6, 3.0, 9);
    const ScalarField j = ScalarField::sample(g, [](std::span<const double> x) {
                            double s = 0.0;
                            for (std::size_t i = 0; i < x.size(); ++i) s += (1.0 + 0.1 * static_cast<double>(i)) * x[i] * x[i];
                            return std::exp(-s);
                          }).normalized();
    const ScalarField m = core::marginalize(j, 1, 2);
    CHECK(m.grid().dim() == 2);
    CHECK(core::integrate(m) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("permute_particles swaps blocks") {
  Grid g(2, 1.0, 9);
  const ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return x[0] + 10.0 * x[1]; });
  const int perm[] = {1, 0};
  const ScalarField p = core::permute_particles(f, perm, 1);
  std::vector<double> x(2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.point(i, x);
    CHECK(p[i] == doctest::Approx(x[1] + 10.0 * x[0]));
  }
}

TEST_CASE("deterministic reductions do not depend on thread count") {
  std::vector<double> v(100000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i)) * 1e3 + 1.0 / (1.0 + static_cast<double>(i));
  omp_set_num_threads(1);
  const double a = core::deterministic_sum(v.size(), [&](std::size_t i) { return v[i]; });
  omp_set_num_threads(3);
  const double b = core::deterministic_sum(v.size(), [&](std::size_t i) { return v[i]; });
  omp_set_num_threads(core::max_threads());
  CHECK(a == b);
}

TEST_CASE("binary and CSV field I/O") {
  Grid g(2, 2.5, 9);
  const ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return std::cos(x[0]) * x[1] + 1e-300; });
  std::stringstream buffer;
  core::write_binary(f, buffer);
  const ScalarField back = core::read_binary(buffer);
  CHECK(back.grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == f[i]);
  std::stringstream bad("garbage");
  CHECK_THROWS_AS(core::read_binary(bad), Error);
  std::ostringstream csv;
  core::write_csv(f, csv);
  CHECK(csv.str().rfind("i0,i1,value\n", 0) == 0);
}

TEST_CASE("density sampler") {
  SUBCASE("1D inverse CDF reproduces mean and variance") {
    Grid g(1, 6.0, 121);
    const core::DensitySampler s(gaussian_1d(g, 0.5, 1.0));
    const core::SampleSet pts = s.draw_many(7, 40000);
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < pts.count(); ++i) {
      m += pts.point(i)[0];
      m2 += pts.point(i)[0] * pts.point(i)[0];
    }
    m /= static_cast<double>(pts.count());
    m2 /= static_cast<double>(pts.count());
    CHECK(std::abs(m - 0.5) < 0.03);
    CHECK(std::abs(m2 - m * m - 1.0) < 0.04);
    CHECK(s.cdf(-6.0) == 0.0);
    CHECK(s.cdf(6.0) == 1.0);
    CHECK(std::abs(s.cdf(0.5) - 0.5) < 1e-3);
  }
  SUBCASE("draw_many is reproducible per stream") {
    Grid g(2, 3.0, 17);
    const core::DensitySampler s(exp_minus_r2(g));
    const auto a = s.draw_many(11, 200);
    const auto b = s.draw_many(11, 200);
    CHECK(std::equal(a.coordinates().begin(), a.coordinates().end(), b.coordinates().begin()));
  }
  SUBCASE("standard normal moments") {
    core::Rng rng = core::make_stream(3, 0);
    double m2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double z = core::standard_normal(rng);
      m2 += z * z;
    }
    CHECK(std::abs(m2 / n - 1.0) < 0.02);
  }
}
