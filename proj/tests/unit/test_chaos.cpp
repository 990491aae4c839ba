#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "doctest.h"
#include "gpchaos/chaos/chaos.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/core/sampling.hpp"
#include "gpchaos/error.hpp"
#include "gpchaos/nbody/nbody.hpp"
#include "oracles/analytic.hpp"

using namespace gpchaos;
using chaos::Metric;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

core::SampleSet normal_samples(int dim, std::size_t n, std::uint64_t seed, double shift = 0.0, double scale = 1.0) {
  auto rng = core::make_stream(seed, 0);
  std::vector<double> c(n * static_cast<std::size_t>(dim));
  for (double& v : c) v = shift + scale * core::standard_normal(rng);
  return core::SampleSet(dim, std::move(c));
}

std::vector<double> column(const core::SampleSet& s) { return {s.coordinates().begin(), s.coordinates().end()}; }

core::ScalarField normal_density(double mean, double sigma, double half_width, int n) {
  core::Grid g(1, half_width, n);
  return core::ScalarField::sample(g, [&](std::span<const double> x) { return oracle::normal_pdf(x[0], mean, sigma); })
      .normalized();
}

std::optional<ErrorKind> kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Smooth positive joint density on [-3,3]^dim with random pair correlations.
core::ScalarField correlated_joint(int dim, int n, std::uint64_t seed) {
  auto rng = core::make_stream(seed, 0);
  std::vector<double> a(static_cast<std::size_t>(dim * dim));
  for (double& v : a) v = 0.6 * (core::uniform01(rng) - 0.5);
  core::Grid g(dim, 3.0, n);
  return core::ScalarField::sample(g, [&](std::span<const double> x) {
           double q = 0.0;
           for (int i = 0; i < dim; ++i) {
             q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
             for (int j = 0; j < i; ++j)
               q += a[static_cast<std::size_t>(i * dim + j)] * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
           }
           return std::exp(-0.5 * q) * (1.2 + std::sin(x[0]));
         }).normalized();
}

}  // namespace

TEST_CASE("metric") {
  const Metric m;
  const std::vector<double> x{0.0, 0.0}, y{3.0, 4.0};
  CHECK(m(x, y) == 1.0);
  CHECK(Metric::euclidean()(x, y) == 5.0);
  CHECK(Metric{chaos::MetricKind::kTruncatedEuclidean, 2.5}(x, y) == 2.5);
  CHECK(m(x, y) == m(y, x));
}

TEST_CASE("assignment solver is optimal on small matrices") {
  auto rng = core::make_stream(3, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 6;
    std::vector<double> cost(n * n);
    for (double& c : cost) c = core::uniform01(rng);
    const auto match = chaos::solve_assignment(cost, n);
    double got = 0.0;
    for (std::size_t i = 0; i < n; ++i) got += cost[i * n + static_cast<std::size_t>(match[i])];
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += cost[i * n + static_cast<std::size_t>(perm[i])];
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("sample Wasserstein closed forms") {
  const core::SampleSet zero(1, {0.0}), half(1, {0.5}), two(1, {2.0});
  CHECK(chaos::wasserstein(zero, half, 1) == 0.5);
  CHECK(chaos::wasserstein(zero, half, 2) == 0.5);
  CHECK(chaos::wasserstein(zero, two, 1) == 1.0);
  CHECK(chaos::wasserstein(zero, two, 2) == 2.0);
  const auto s = normal_samples(3, 50, 1);
  CHECK(chaos::wasserstein(s, s, 1) == 0.0);
  CHECK(chaos::wasserstein(s, s, 2) == 0.0);

  SUBCASE("particle blocks average the per-particle cost") {
    const core::SampleSet a(2, {0.0, 0.0}), b(2, {0.5, 2.0});
    CHECK(chaos::wasserstein(a, b, 1, {}, 1) == doctest::Approx(0.75));
    CHECK(chaos::wasserstein(a, b, 2, {}, 1) == doctest::Approx(std::sqrt((0.25 + 4.0) / 2.0)));
  }
  SUBCASE("errors") {
    CHECK(kind_of([&] { chaos::wasserstein(normal_samples(1, 10, 1), normal_samples(1, 11, 2), 1); }) ==
          ErrorKind::kSizeMismatch);
    CHECK(kind_of([&] { chaos::wasserstein(normal_samples(1, 1025, 1), normal_samples(1, 1025, 2), 1); }) ==
          ErrorKind::kCapExceeded);
    CHECK(kind_of([&] { chaos::wasserstein(normal_samples(1, 4, 1), normal_samples(2, 4, 2), 1); }) ==
          ErrorKind::kDimensionMismatch);
  }
}

TEST_CASE("1D empirical transport equals sorted matching") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = normal_samples(1, 300, seed);
    const auto b = normal_samples(1, 300, seed + 100, 0.4, 1.3);
    CHECK(std::abs(chaos::wasserstein(a, b, 2) - oracle::sorted_matching_cost(column(a), column(b), 2, kInf)) < 1e-12);
    CHECK(std::abs(chaos::wasserstein(a, b, 1, Metric::euclidean()) -
                   oracle::sorted_matching_cost(column(a), column(b), 1, kInf)) < 1e-12);
  }
}

TEST_CASE("1D density transport agrees with the assignment solver") {
  // Equal-mass atoms on grid nodes: the density view and the sample view
  // describe the same discrete measure.
  core::Grid g(1, 4.0, 81);
  auto rng = core::make_stream(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int atoms = 40;
    std::vector<double> va(g.size(), 0.0), vb(g.size(), 0.0), xa, xb;
    for (int i = 0; i < atoms; ++i) {
      const int ia = static_cast<int>(core::uniform01(rng) * 30);
      const int ib = 40 + static_cast<int>(core::uniform01(rng) * 40) - (trial % 3) * 15;
      va[static_cast<std::size_t>(ia)] += 1.0 / g.axis_weight(ia);
      vb[static_cast<std::size_t>(ib)] += 1.0 / g.axis_weight(ib);
      xa.push_back(g.coordinate(ia));
      xb.push_back(g.coordinate(ib));
    }
    const core::ScalarField da(g, va), db(g, vb);
    const core::SampleSet sa(1, xa), sb(1, xb);
    for (double t : {0.3, 1.0, 2.5}) {
      const Metric m{chaos::MetricKind::kTruncatedEuclidean, t};
      CHECK(chaos::wasserstein(da, db, 1, m) == doctest::Approx(chaos::wasserstein(sa, sb, 1, m)).epsilon(1e-10));
    }
    CHECK(chaos::wasserstein(da, db, 1, Metric::euclidean()) ==
          doctest::Approx(chaos::wasserstein(sa, sb, 1, Metric::euclidean())).epsilon(1e-10));
    CHECK(chaos::wasserstein(da, db, 2) == doctest::Approx(chaos::wasserstein(sa, sb, 2)).epsilon(1e-10));
  }

  SUBCASE("Gaussian shift") {
    const auto a = normal_density(0.0, 1.0, 8.0, 1601);
    const auto b = normal_density(0.5, 1.0, 8.0, 1601);
    CHECK(chaos::wasserstein(a, b, 2) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(chaos::wasserstein(a, b, 1, Metric::euclidean()) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(chaos::wasserstein(a, a, 1) == 0.0);
  }
}

TEST_CASE("Wasserstein is a metric on sample sets") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = normal_samples(2, 60, 3 * seed + 1);
    const auto y = normal_samples(2, 60, 3 * seed + 2, 0.3);
    const auto z = normal_samples(2, 60, 3 * seed + 3, -0.2, 0.7);
    for (int order : {1, 2}) {
      for (int pd : {0, 1}) {
        const double xy = chaos::wasserstein(x, y, order, {}, pd);
        CHECK(xy == chaos::wasserstein(y, x, order, {}, pd));
        CHECK(chaos::wasserstein(x, z, order, {}, pd) <=
              xy + chaos::wasserstein(y, z, order, {}, pd) + 1e-12);
      }
    }
  }
}

TEST_CASE("W1 <= W2 and the moment bound") {
  const auto s = normal_samples(1, 40, 5);
  const auto same = chaos::w1_w2_bound_check(s, s, 4.0);
  CHECK(same.w2 == 0.0);
  CHECK(same.holds);

  int held = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto f = normal_samples(2, 64, 1000 + static_cast<std::uint64_t>(rep), 0.0, 1.0);
    const auto g = normal_samples(2, 64, 5000 + static_cast<std::uint64_t>(rep), 0.1 * (rep % 7), 1.0 + 0.05 * (rep % 5));
    const auto r = chaos::w1_w2_bound_check(f, g, 4.0, 1);
    CHECK(r.w1 <= r.w2);
    held += r.holds ? 1 : 0;
  }
  CHECK(held == 100);
  CHECK(kind_of([&] { chaos::w1_w2_bound_check(s, s, 2.0); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("entropy") {
  core::Grid unit(1, 0.5, 101);
  CHECK(chaos::entropy(core::ScalarField::constant(unit, 1.0).normalized()) == doctest::Approx(0.0).epsilon(1e-14));
  const auto n01 = normal_density(0.0, 1.0, 10.0, 2001);
  CHECK(std::abs(chaos::entropy(n01) - (-1.41894)) < 1e-4);
  CHECK(std::abs(chaos::entropy(n01) - oracle::normal_entropy(1.0)) < 1e-6);

  SUBCASE("product additivity") {
    const auto rho = normal_density(0.3, 0.8, 5.0, 121);
    const auto joint = core::tensor_power(rho, 2);
    CHECK(std::abs(chaos::entropy(joint, 4.0, 1) - chaos::entropy(rho)) < 1e-8);
  }
  SUBCASE("reference decomposition") {
    for (const auto& rho : {normal_density(0.0, 1.0, 6.0, 241), normal_density(0.5, 0.6, 6.0, 241)}) {
      const auto dec = chaos::entropy_decomposition(rho, 4.0);
      CHECK(dec.residual < 1e-6);
      CHECK(dec.direct == doctest::Approx(chaos::entropy(rho)));
    }
    const auto joint = core::tensor_power(normal_density(0.0, 1.0, 5.0, 101), 2);
    CHECK(chaos::entropy_decomposition(joint, 4.0, 1).residual < 1e-6);
    // A box that truncates the reference breaks the identity.
    CHECK(chaos::entropy_decomposition(normal_density(0.0, 0.3, 0.8, 81), 4.0).residual > 1e-3);
  }
  SUBCASE("unresolved moment") {
    core::Grid g(1, 5.0, 101);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 1 && i > 80) ? 1.0 : 1e-3;
    CHECK(kind_of([&] { chaos::entropy(core::ScalarField(g, v).normalized()); }) == ErrorKind::kMomentDiverged);
  }
}

TEST_CASE("relative entropy and total variation") {
  const auto a = normal_density(0.0, 1.0, 10.0, 2001);
  const auto b = normal_density(0.5, 1.0, 10.0, 2001);
  CHECK(chaos::relative_entropy(a, a) == 0.0);
  CHECK(std::abs(chaos::relative_entropy(a, b) - oracle::normal_kl_shift(0.5)) < 1e-5);
  CHECK(chaos::total_variation(a, a) == 0.0);
  CHECK(std::abs(chaos::total_variation(a, b) - 0.19741) < 1e-4);
  CHECK(std::abs(chaos::total_variation(a, b) - oracle::normal_tv_shift(0.5)) < 1e-5);

  core::Grid g(1, 2.0, 41);
  const auto left = core::ScalarField::sample(g, [](std::span<const double> x) { return x[0] < -0.5 ? 1.0 : 0.0; }).normalized();
  const auto right = core::ScalarField::sample(g, [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; }).normalized();
  CHECK(std::abs(chaos::total_variation(left, right) - 1.0) < 1e-10);
  CHECK(kind_of([&] { chaos::relative_entropy(left, right); }) == ErrorKind::kAbsoluteContinuity);

  SUBCASE("nonnegativity and Csiszar-Kullback on random pairs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = correlated_joint(2, 31, seed);
      const auto q = correlated_joint(2, 31, seed + 50);
      const double kl = chaos::relative_entropy(p, q);
      CHECK(kl >= -1e-10);
      CHECK(chaos::total_variation(p, q) <= std::sqrt(0.5 * kl) + 1e-6);
    }
  }
}

TEST_CASE("Fisher information") {
  for (double sigma : {1.0, 0.7, 1.5}) {
    const auto rho = normal_density(0.0, sigma, 10.0 * sigma, 2001);
    CHECK(std::abs(chaos::fisher_information(rho) - 1.0 / (sigma * sigma)) < 1e-3);
    CHECK(chaos::fisher_information(rho, &rho) == 0.0);
  }
  const auto rho = normal_density(0.2, 0.8, 6.0, 241);
  const auto joint = core::tensor_power(rho, 2);
  CHECK(std::abs(chaos::fisher_information(joint, nullptr, 1) - chaos::fisher_information(rho)) < 1e-6);

  SUBCASE("relative Fisher of a shift") {
    // |grad log(a/b)|^2 = shift^2 for unit-variance Gaussians.
    const auto a = normal_density(0.0, 1.0, 10.0, 2001);
    const auto b = normal_density(0.5, 1.0, 10.0, 2001);
    CHECK(chaos::fisher_information(a, &b) == doctest::Approx(0.25).epsilon(1e-3));
  }
}

TEST_CASE("entropy chain rule and super-additivity") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto joint = correlated_joint(3, 21, seed);
    const double h = chaos::raw_entropy(joint);
    for (int k = 1; k <= 2; ++k) {
      std::vector<int> first(static_cast<std::size_t>(k)), rest(static_cast<std::size_t>(3 - k));
      std::iota(first.begin(), first.end(), 0);
      std::iota(rest.begin(), rest.end(), k);
      const double h1 = chaos::raw_entropy(core::marginalize_particles(joint, first, 1));
      const double h2 = chaos::raw_entropy(core::marginalize_particles(joint, rest, 1));
      CHECK(h >= h1 + h2 - 1e-8);
    }
    // Symmetrize so that all one-particle marginals agree.
    std::vector<double> sym(joint.size(), 0.0);
    std::vector<int> perm{0, 1, 2};
    int count = 0;
    do {
      const auto p = core::permute_particles(joint, perm, 1);
      for (std::size_t i = 0; i < sym.size(); ++i) sym[i] += p[i];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto s = core::ScalarField(joint.grid(), sym).normalized();
    CHECK(chaos::entropy(s, 4.0, 1) >= chaos::raw_entropy(core::marginalize(s, 1, 1)) - 1e-8);
  }
}

TEST_CASE("sampled W2 and the HWI report") {
  const auto rho = normal_density(0.0, 0.8, 5.0, 41);
  const auto product = core::tensor_power(rho, 2);
  SUBCASE("identical densities") {
    const auto w = chaos::sampled_wasserstein(product, product, 1, 2, 128, 3, 8);
    CHECK(w.value == 0.0);
    const auto r = chaos::hwi_report(product, product, 2, {.samples = 128, .resamples = 8, .seed = 1});
    CHECK(r.h == 0.0);
    CHECK(r.hwi_slack >= 0.0);
    CHECK(r.entropy_distance_slack >= 0.0);
  }
  SUBCASE("deterministic") {
    const auto other = correlated_joint(2, 41, 2);
    const core::ScalarField moved(product.grid(), std::vector<double>(other.values().begin(), other.values().end()));
    const auto a = chaos::sampled_wasserstein(product, moved.normalized(), 1, 2, 96, 9, 8);
    const auto b = chaos::sampled_wasserstein(product, moved.normalized(), 1, 2, 96, 9, 8);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.std_error > 0.0);
  }
  SUBCASE("interacting pair") {
    const auto problem = nbody::NBodyProblem::make(2, 1, gp::Trap::harmonic(),
                                                   scattering::PairPotential::gaussian(1.0, 0.5), 5.0, 37);
    const auto gs = nbody::ground_state(problem);
    gp::GpProblem gpp{gp::Trap::harmonic(), 0.0, 1, core::Grid(1, 5.0, 37), scattering::PairPotential::gaussian(2.0, 0.5)};
    gp::GpOptions opts;
    opts.tol = 1e-9;
    const auto ref = core::tensor_power(gp::minimize_gp(gpp, opts).density(), 2);
    const auto r = chaos::hwi_report(gs.rho, ref, 2, {.samples = 256, .resamples = 16, .seed = 4});
    CHECK(r.h > 0.0);
    CHECK(r.hwi_slack >= -3.0 * r.w2_std_error);
    CHECK(r.entropy_distance_slack >= -3.0 * r.w2_std_error);
  }
}

TEST_CASE("empirical concentration") {
  const auto g = normal_density(0.0, 1.0, 6.0, 241);
  const core::DensitySampler sampler(g);
  const auto phis = chaos::default_test_functions(1);
  const int n = 3;
  const std::size_t configs = 20000;
  std::vector<double> coords;
  for (std::size_t s = 0; s < configs; ++s) {
    auto rng = core::make_stream(77, s);
    double x;
    for (int p = 0; p < n; ++p) {
      sampler.draw(rng, std::span<double>(&x, 1));
      coords.push_back(x);
    }
  }
  const core::SampleSet positions(n, coords);
  const auto est = chaos::empirical_concentration(positions, n, g, phis);
  REQUIRE(est.size() == phis.size());
  for (std::size_t k = 0; k < phis.size(); ++k) {
    // iid: E[<mu - G, phi>^2] = Var_G(phi) / N
    std::vector<double> f(g.size()), f2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.grid().coordinate(static_cast<int>(i));
      const double v = phis[k].f(std::span<const double>(&x, 1));
      f[i] = v * g[i];
      f2[i] = v * v * g[i];
    }
    const double mean = core::integrate_nodes(g.grid(), f);
    const double var = core::integrate_nodes(g.grid(), f2) - mean * mean;
    if (phis[k].name == "const") {
      CHECK(est[k].value < 1e-28);
    } else {
      CHECK(std::abs(est[k].value - var / n) < 3.0 * est[k].std_error);
    }
  }
}

TEST_CASE("chaos sweep") {
  chaos::SweepConfig cfg;
  cfg.n_values = {2, 3};
  cfg.grid_n = 25;
  cfg.sim = {0.02, 0.5, 400, 1};
  cfg.survival_t = 0.5;
  cfg.w2_samples = 96;
  cfg.bootstrap = 8;

  SUBCASE("non-interacting rows factorize") {
    cfg.interacting = false;
    const auto report = chaos::chaos_sweep(cfg);
    CHECK(report.label == "non-interacting");
    for (const auto& row : report.rows) {
      REQUIRE_FALSE(row.failed);
      CHECK(row.w1_marg1 < 1e-6);
      CHECK(row.tv_marg1 < 1e-6);
      CHECK(std::abs(row.relative_entropy) < 1e-8);
      CHECK(row.relative_fisher < 1e-6);
      CHECK(row.entropy_gap < 1e-6);
      CHECK(std::abs(row.per_particle_path_entropy) < 1e-6);
    }
  }
  SUBCASE("interacting rows satisfy the inequalities") {
    const auto report = chaos::chaos_sweep(cfg);
    CHECK(report.label == "1D mean-field analog");
    REQUIRE(report.rows.size() == 2);
    for (const auto& row : report.rows) {
      REQUIRE_FALSE(row.failed);
      CHECK(row.chain_rule_gap >= -1e-8);
      CHECK(row.superadditivity_gap >= -1e-8);
      CHECK(row.csiszar_kullback_slack >= -1e-6);
      CHECK(row.hwi_slack >= -3.0 * row.w2_std_error);
      CHECK(row.entropy_distance_slack >= -3.0 * row.w2_std_error);
      CHECK(row.w1_w2_holds);
      CHECK(row.relative_entropy > 0.0);
      CHECK(row.concentration.size() == report.test_function_names.size());
    }
    CHECK(report.rows[0].n < report.rows[1].n);
  }
  SUBCASE("a row that cannot be built is recorded") {
    cfg.n_values = {2, 7};
    const auto report = chaos::chaos_sweep(cfg);
    REQUIRE(report.rows.size() == 2);
    CHECK_FALSE(report.rows[0].failed);
    CHECK(report.rows[1].failed);
    CHECK(report.rows[1].error.find("cap") != std::string::npos);
  }
  SUBCASE("validation") {
    cfg.n_values = {3, 2};
    CHECK(kind_of([&] { chaos::chaos_sweep(cfg); }) == ErrorKind::kValidation);
  }
}
