#include "gpchaos/chaos/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/core/sampling.hpp"
#include "gpchaos/error.hpp"
#include "gpchaos/nbody/nbody.hpp"

namespace gpchaos::chaos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_metric(const Metric& metric) {
  require(metric.truncation > 0.0 && std::isfinite(metric.truncation), ErrorKind::kValidation,
          "metric truncation must be positive", "truncation");
}

void check_order(int order) {
  require(order == 1 || order == 2, ErrorKind::kInvalidArgument, "Wasserstein order must be 1 or 2", "order");
}

// Per-pair cost between two configurations: mean over particle blocks of d_E
// (order 1) or of the squared Euclidean distance (order 2).
double pair_cost(std::span<const double> x, std::span<const double> y, int order, const Metric& metric,
                 int particle_dim) {
  const std::size_t pd = static_cast<std::size_t>(particle_dim);
  const std::size_t blocks = x.size() / pd;
  double total = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto xb = x.subspan(b * pd, pd);
    const auto yb = y.subspan(b * pd, pd);
    if (order == 1) {
      total += metric(xb, yb);
    } else {
      for (std::size_t c = 0; c < pd; ++c) total += (xb[c] - yb[c]) * (xb[c] - yb[c]);
    }
  }
  return total / static_cast<double>(blocks);
}

std::vector<double> cost_matrix(const core::SampleSet& a, const core::SampleSet& b, int order,
                                const Metric& metric, int particle_dim) {
  const std::size_t n = a.count();
  std::vector<double> cost(n * n);
  core::parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = pair_cost(a.point(i), b.point(j), order, metric, particle_dim);
  });
  return cost;
}

// Mean matched cost of the optimal assignment. The matched costs are sorted
// before summing so the result does not depend on which side is the row set.
double optimal_mean_cost(std::span<const double> cost, std::size_t n) {
  const auto match = solve_assignment(cost, n);
  std::vector<double> matched(n);
  for (std::size_t i = 0; i < n; ++i) matched[i] = cost[i * n + static_cast<std::size_t>(match[i])];
  std::sort(matched.begin(), matched.end());
  return core::pairwise_sum(matched) / static_cast<double>(n);
}

double finish(double mean_cost, int order) { return order == 2 ? std::sqrt(mean_cost) : mean_cost; }

int resolve_particle_dim(int dim, int particle_dim) {
  if (particle_dim == 0) return dim;
  require(particle_dim > 0 && dim % particle_dim == 0, ErrorKind::kDimensionMismatch,
          "sample dimension is not a multiple of the particle dimension", "particle_dim");
  return particle_dim;
}

// Trapezoid node masses normalized to total 1.
std::vector<double> node_masses(const core::ScalarField& rho) {
  const core::Grid& g = rho.grid();
  std::vector<double> m(rho.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    require(rho[i] >= 0.0, ErrorKind::kValidation, "density has negative values", "rho");
    m[i] = g.weight(i) * rho[i];
  }
  const double total = core::pairwise_sum(m);
  require(total > 0.0, ErrorKind::kValidation, "density has zero mass", "rho");
  for (double& v : m) v /= total;
  return m;
}

void check_same_grid(const core::ScalarField& a, const core::ScalarField& b) {
  require(a.grid() == b.grid(), ErrorKind::kDimensionMismatch, "densities live on different grids", "ref");
}

int particle_count(const core::ScalarField& rho, int d) { return d == 0 ? 1 : particles_of(rho, d); }

// sum m log(m / w) over nodes with positive mass
double mass_entropy(const core::Grid& g, std::span<const double> m) {
  return core::deterministic_sum(m.size(), [&](std::size_t i) {
    return m[i] > 0.0 ? m[i] * std::log(m[i] / g.weight(i)) : 0.0;
  });
}

// k-th moment of rho using only nodes whose indices are all even, with the
// trapezoid weights of the doubled spacing. Requires an odd point count.
double coarse_moment(const core::ScalarField& rho, double k) {
  const core::Grid& g = rho.grid();
  const int n = g.points_per_axis();
  const int dim = g.dim();
  const double h2 = 2.0 * g.spacing();
  double mass = 0.0;
  double mom = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(dim));
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.unravel(i, idx);
    bool even = true;
    double w = 1.0;
    for (int a = 0; a < dim && even; ++a) {
      const int ia = idx[static_cast<std::size_t>(a)];
      even = ia % 2 == 0;
      w *= (ia == 0 || ia == n - 1) ? 0.5 * h2 : h2;
    }
    if (!even) continue;
    g.point(i, x);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    mass += w * rho[i];
    mom += w * std::pow(r2, 0.5 * k) * rho[i];
  }
  return mass > 0.0 ? mom / mass : 0.0;
}

void check_moment(const core::ScalarField& rho, double k) {
  const core::Grid& g = rho.grid();
  if (g.points_per_axis() < 5 || g.points_per_axis() % 2 == 0) return;
  const double mass = core::integrate(rho);
  if (mass <= 0.0) return;
  const double fine = core::moment(rho, k) / mass;
  const double coarse = coarse_moment(rho, k);
  const bool converged = std::isfinite(fine) && std::abs(fine - coarse) <= 1e-2 * std::max(fine, 1e-300);
  require(converged, ErrorKind::kMomentDiverged,
          "moment of order " + std::to_string(k) + " does not settle under grid refinement (fine " +
              std::to_string(fine) + ", coarse " + std::to_string(coarse) + ")",
          "rho");
}

// log of 1 / \int_{R^p} exp(-|r|^k) dr
double log_reference_constant(int p, double k) {
  const double half = 0.5 * p;
  const double log_integral = std::log(2.0) + half * std::log(std::numbers::pi) - std::lgamma(half) +
                              std::lgamma(p / k) - std::log(k);
  return -log_integral;
}

double nelson_energy_density(const core::VectorField& b, std::size_t i, const core::VectorField* bref) {
  double s = 0.0;
  for (int c = 0; c < b.components(); ++c) {
    const double v = b.at(i, c) - (bref ? bref->at(i, c) : 0.0);
    s += v * v;
  }
  return s;
}

double sample_mean(std::span<const double> v) { return core::pairwise_sum(v) / static_cast<double>(v.size()); }

double sample_stddev(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return std::sqrt(core::pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

}  // namespace

double Metric::operator()(std::span<const double> x, std::span<const double> y) const {
  double s = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
  const double e = std::sqrt(s);
  return kind == MetricKind::kTruncatedEuclidean ? std::min(e, truncation) : e;
}

std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n) {
  require(cost.size() == n * n, ErrorKind::kSizeMismatch, "cost matrix is not n x n");
  require(n <= kMaxAssignment, ErrorKind::kCapExceeded,
          "assignment size " + std::to_string(n) + " exceeds " + std::to_string(kMaxAssignment), "samples");
  for (double c : cost) require(std::isfinite(c), ErrorKind::kInvalidArgument, "cost matrix has non-finite entries");
  if (n == 0) return {};

  // Shortest augmenting paths with row/column potentials, 1-based.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(n);
  for (std::size_t j = 1; j <= n; ++j) match[p[j] - 1] = static_cast<int>(j - 1);
  return match;
}

double wasserstein(const core::SampleSet& a, const core::SampleSet& b, int order, const Metric& metric,
                   int particle_dim) {
  check_order(order);
  check_metric(metric);
  require(a.dim() == b.dim(), ErrorKind::kDimensionMismatch, "sample sets have different dimensions");
  require(a.count() == b.count(), ErrorKind::kSizeMismatch,
          "exact transport needs equal sample counts (" + std::to_string(a.count()) + " vs " +
              std::to_string(b.count()) + ")",
          "samples");
  require(a.count() <= kMaxAssignment, ErrorKind::kCapExceeded,
          "sample count " + std::to_string(a.count()) + " exceeds " + std::to_string(kMaxAssignment), "samples");
  require(a.count() > 0, ErrorKind::kInvalidArgument, "empty sample sets", "samples");
  const int pd = resolve_particle_dim(a.dim(), particle_dim);
  // Ties between optimal matchings can round differently depending on which
  // set indexes the rows; a fixed orientation makes W(a, b) == W(b, a) exactly.
  const bool swap = std::lexicographical_compare(b.coordinates().begin(), b.coordinates().end(),
                                                 a.coordinates().begin(), a.coordinates().end());
  const auto cost = swap ? cost_matrix(b, a, order, metric, pd) : cost_matrix(a, b, order, metric, pd);
  return finish(optimal_mean_cost(cost, a.count()), order);
}

double wasserstein(const core::ScalarField& a, const core::ScalarField& b, int order, const Metric& metric) {
  check_order(order);
  check_metric(metric);
  check_same_grid(a, b);
  const core::Grid& g = a.grid();
  require(g.dim() == 1, ErrorKind::kDimensionMismatch, "exact density transport is one-dimensional only; sample instead");
  const auto ma = node_masses(a);
  const auto mb = node_masses(b);
  const std::size_t n = ma.size();
  const double h = g.spacing();

  if (order == 2) {
    // Quantile coupling of the two node-mass distributions.
    std::vector<double> pieces;
    std::size_t i = 0, j = 0;
    double ra = ma[0], rb = mb[0];
    while (i < n && j < n) {
      const double m = std::min(ra, rb);
      if (m > 0.0) {
        const double dx = g.coordinate(static_cast<int>(i)) - g.coordinate(static_cast<int>(j));
        pieces.push_back(m * dx * dx);
      }
      ra -= m;
      rb -= m;
      if (ra <= 0.0 && ++i < n) ra = ma[i];
      if (rb <= 0.0 && ++j < n) rb = mb[j];
    }
    return std::sqrt(core::pairwise_sum(pieces));
  }

  // C_i: net mass that must cross the edge (i, i+1).
  std::vector<double> flow(n - 1);
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    c += ma[i] - mb[i];
    flow[i] = c;
  }
  if (metric.kind == MetricKind::kEuclidean) {
    std::vector<double> terms(flow.size());
    for (std::size_t i = 0; i < flow.size(); ++i) terms[i] = h * std::abs(flow[i]);
    return core::pairwise_sum(terms);
  }

  // Truncated cost min(|x - y|, T): part of the imbalance may jump at cost T
  // instead of travelling. With F_i the cumulative jumped mass, minimize
  //   sum_i h |C_i - F_i| + (T/2) sum_i |F_i - F_{i-1}|,  F_{-1} = F_{n-1} = 0.
  // Optimal F takes values in {C_i} u {0}; dynamic programming over that set
  // with a two-pass distance transform for the |F_i - F_{i-1}| term.
  std::vector<double> cand(flow);
  cand.push_back(0.0);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  const std::size_t m = cand.size();
  const double slope = 0.5 * metric.truncation;
  auto transform = [&](std::vector<double>& val) {
    for (std::size_t k = 1; k < m; ++k) val[k] = std::min(val[k], val[k - 1] + slope * (cand[k] - cand[k - 1]));
    for (std::size_t k = m - 1; k-- > 0;) val[k] = std::min(val[k], val[k + 1] + slope * (cand[k + 1] - cand[k]));
  };
  std::vector<double> val(m);
  for (std::size_t k = 0; k < m; ++k) val[k] = slope * std::abs(cand[k]);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) val[k] += h * std::abs(flow[i] - cand[k]);
    transform(val);
  }
  const auto zero = static_cast<std::size_t>(std::lower_bound(cand.begin(), cand.end(), 0.0) - cand.begin());
  return val[zero];
}

BoundCheck w1_w2_bound_check(const core::SampleSet& f, const core::SampleSet& g, double k, int particle_dim,
                             const Metric& metric) {
  require(k > 2.0, ErrorKind::kInvalidArgument, "moment order k must exceed 2", "k");
  const int pd = resolve_particle_dim(f.dim(), particle_dim);
  BoundCheck out;
  out.w1 = wasserstein(f, g, 1, metric, pd);
  out.w2 = wasserstein(f, g, 2, metric, pd);
  out.moment_sum = core::moment(f.project(0, pd), k) + core::moment(g.project(0, pd), k);
  out.rhs = std::pow(2.0, 1.5) * std::pow(out.moment_sum, 1.0 / k) * std::pow(out.w1, 0.5 - 1.0 / k);
  // Rounding allowance only: W_1 = W_2 is attained by single-point couplings.
  const double eps = 1e-12 * std::max(1.0, out.w2);
  out.holds = out.w1 <= out.w2 + eps && out.w2 <= out.rhs + eps;
  return out;
}

int particles_of(const core::ScalarField& rho, int d) {
  require(d >= 1 && rho.grid().dim() % d == 0, ErrorKind::kDimensionMismatch,
          "joint dimension is not a multiple of the particle dimension", "d");
  return rho.grid().dim() / d;
}

double raw_entropy(const core::ScalarField& rho) { return mass_entropy(rho.grid(), node_masses(rho)); }

double entropy(const core::ScalarField& rho, double k, int d) {
  const int n = particle_count(rho, d);
  check_moment(rho, k);
  return raw_entropy(rho) / n;
}

EntropyDecomposition entropy_decomposition(const core::ScalarField& rho, double k, int d) {
  require(k > 0.0, ErrorKind::kInvalidArgument, "k must be positive", "k");
  const int n = particle_count(rho, d);
  const core::Grid& g = rho.grid();
  const int p = d == 0 ? g.dim() : d;
  const double log_c = log_reference_constant(p, k);
  const auto m = node_masses(rho);

  std::vector<double> log_ref(g.size());
  core::parallel_for(g.size(), [&](std::size_t i) {
    double x[core::kMaxDim];
    std::span<double> xs(x, static_cast<std::size_t>(g.dim()));
    g.point(i, xs);
    double s = 0.0;
    for (int b = 0; b < n; ++b) {
      double r2 = 0.0;
      for (int c = 0; c < p; ++c) r2 += xs[static_cast<std::size_t>(b * p + c)] * xs[static_cast<std::size_t>(b * p + c)];
      s += log_c - std::pow(r2, 0.5 * k);
    }
    log_ref[i] = s;
  });
  const double z_grid =
      core::deterministic_sum(g.size(), [&](std::size_t i) { return g.weight(i) * std::exp(log_ref[i]); });
  const double log_z = std::log(z_grid);
  const double relative = core::deterministic_sum(g.size(), [&](std::size_t i) {
    return m[i] > 0.0 ? m[i] * (std::log(m[i] / g.weight(i)) - (log_ref[i] - log_z)) : 0.0;
  });
  const double cross = core::deterministic_sum(g.size(), [&](std::size_t i) { return m[i] * log_ref[i]; });

  EntropyDecomposition out;
  out.direct = mass_entropy(g, m) / n;
  out.decomposed = (relative + cross) / n;
  out.residual = std::abs(out.direct - out.decomposed);
  return out;
}

double relative_entropy(const core::ScalarField& rho, const core::ScalarField& ref, int d) {
  check_same_grid(rho, ref);
  const int n = particle_count(rho, d);
  const auto m = node_masses(rho);
  const auto q = node_masses(ref);
  const double m_floor = 1e-12 * *std::max_element(m.begin(), m.end());
  const double q_floor = 1e-30 * *std::max_element(q.begin(), q.end());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] > m_floor && q[i] < q_floor) {
      throw Error(ErrorKind::kAbsoluteContinuity,
                  "rho has mass where the reference vanishes (node " + std::to_string(i) + ")", "ref");
    }
  }
  const double kl = core::deterministic_sum(m.size(), [&](std::size_t i) {
    return (m[i] > 0.0 && q[i] > 0.0) ? m[i] * std::log(m[i] / q[i]) : 0.0;
  });
  return kl / n;
}

double fisher_information(const core::ScalarField& rho, const core::ScalarField* ref, int d,
                          const core::FloorOptions& floor) {
  const int n = particle_count(rho, d);
  const auto m = node_masses(rho);
  // |grad log rho|^2 = 4 |b|^2 with b the Nelson drift (1/2) grad rho / rho.
  const auto b = core::grad_log_density(rho, floor);
  std::optional<core::VectorField> bref;
  if (ref) {
    check_same_grid(rho, *ref);
    bref.emplace(core::grad_log_density(*ref, floor));
  }
  const core::VectorField* br = bref ? &*bref : nullptr;
  const double total = core::deterministic_sum(m.size(), [&](std::size_t i) {
    return m[i] > 0.0 ? 4.0 * m[i] * nelson_energy_density(b, i, br) : 0.0;
  });
  return total / n;
}

double total_variation(const core::ScalarField& rho, const core::ScalarField& ref) {
  check_same_grid(rho, ref);
  const auto m = node_masses(rho);
  const auto q = node_masses(ref);
  return 0.5 * core::deterministic_sum(m.size(), [&](std::size_t i) { return std::abs(m[i] - q[i]); });
}

SampledDistance sampled_wasserstein(const core::ScalarField& a, const core::ScalarField& b, int d, int order,
                                    std::size_t samples, std::uint64_t seed, int resamples, const Metric& metric) {
  check_order(order);
  check_metric(metric);
  check_same_grid(a, b);
  require(samples >= 2 && samples <= kMaxAssignment, ErrorKind::kCapExceeded,
          "sample count must be in [2, " + std::to_string(kMaxAssignment) + "]", "samples");
  require(resamples >= 0, ErrorKind::kInvalidArgument, "resamples must be nonnegative", "resamples");
  const int pd = resolve_particle_dim(a.grid().dim(), d);
  const auto xs = core::DensitySampler(a).draw_many(seed, samples);
  const auto ys = core::DensitySampler(b).draw_many(seed, samples);
  const auto cost = cost_matrix(xs, ys, order, metric, pd);

  SampledDistance out;
  out.samples = samples;
  out.value = finish(optimal_mean_cost(cost, samples), order);
  if (resamples < 2) return out;

  std::vector<double> replicate(static_cast<std::size_t>(resamples));
  const std::uint64_t boot_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  core::parallel_for(replicate.size(), [&](std::size_t r) {
    auto rng = core::make_stream(boot_seed, r);
    std::vector<std::size_t> rows(samples);
    for (auto& row : rows) {
      row = std::min(samples - 1, static_cast<std::size_t>(core::uniform01(rng) * static_cast<double>(samples)));
    }
    std::vector<double> sub(samples * samples);
    for (std::size_t i = 0; i < samples; ++i) {
      for (std::size_t j = 0; j < samples; ++j) sub[i * samples + j] = cost[rows[i] * samples + rows[j]];
    }
    replicate[r] = finish(optimal_mean_cost(sub, samples), order);
  });
  out.std_error = sample_stddev(replicate, sample_mean(replicate));
  return out;
}

HwiReport hwi_report(const core::ScalarField& rho_n, const core::ScalarField& ref_product, int n_particles,
                     const HwiOptions& options) {
  check_same_grid(rho_n, ref_product);
  require(n_particles >= 1 && rho_n.grid().dim() % n_particles == 0, ErrorKind::kDimensionMismatch,
          "joint dimension is not a multiple of N", "N");
  const int d = rho_n.grid().dim() / n_particles;

  HwiReport out;
  out.convex_trap = options.convex_trap;
  out.h = relative_entropy(rho_n, ref_product, d);
  const auto w2 = sampled_wasserstein(rho_n, ref_product, d, 2, options.samples, options.seed, options.resamples);
  out.w2 = w2.value;
  out.w2_std_error = w2.std_error;
  out.i_rel = fisher_information(rho_n, &ref_product, d);
  out.i_joint = fisher_information(rho_n, nullptr, d);
  out.i_ref = fisher_information(ref_product, nullptr, d);
  out.entropy_gap = std::abs(raw_entropy(rho_n) - raw_entropy(ref_product)) / n_particles;
  out.hwi_slack = out.w2 * std::sqrt(out.i_rel) - out.h;
  out.entropy_distance_slack = out.w2 * (std::sqrt(out.i_joint) + std::sqrt(out.i_ref)) - out.entropy_gap;
  return out;
}

std::vector<TestFunction> default_test_functions(int d) {
  require(d >= 1, ErrorKind::kInvalidArgument, "dimension must be positive", "d");
  auto bump = [d](double center, double width) {
    return [d, center, width](std::span<const double> x) {
      double r2 = (x[0] - center) * (x[0] - center);
      for (int c = 1; c < d; ++c) r2 += x[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
      return std::exp(-0.5 * r2 / (width * width));
    };
  };
  return {
      {"gauss_0", bump(0.0, 0.5)},
      {"gauss_p075", bump(0.75, 0.5)},
      {"gauss_m075", bump(-0.75, 0.5)},
      {"sigmoid", [](std::span<const double> x) { return 1.0 / (1.0 + std::exp(-2.0 * x[0])); }},
      {"clamp", [](std::span<const double> x) { return std::clamp(x[0], -1.0, 1.0); }},
      {"const", [](std::span<const double>) { return 1.0; }},
  };
}

std::vector<diffusion::Estimate> empirical_concentration(const core::SampleSet& positions, int n_particles,
                                                         const core::ScalarField& g,
                                                         const std::vector<TestFunction>& phis) {
  const core::Grid& grid = g.grid();
  const int d = grid.dim();
  require(n_particles >= 1 && positions.dim() == n_particles * d, ErrorKind::kDimensionMismatch,
          "positions do not hold N particles of the reference dimension", "positions");
  require(positions.count() >= 2, ErrorKind::kInvalidArgument, "need at least two configurations", "positions");
  const auto m = node_masses(g);
  std::vector<diffusion::Estimate> out;
  for (const auto& phi : phis) {
    const double expectation = core::deterministic_sum(grid.size(), [&](std::size_t i) {
      double x[core::kMaxDim];
      std::span<double> xs(x, static_cast<std::size_t>(d));
      grid.point(i, xs);
      return m[i] * phi.f(xs);
    });
    std::vector<double> sq(positions.count());
    core::parallel_for(sq.size(), [&](std::size_t s) {
      const auto cfg = positions.point(s);
      double mean = 0.0;
      for (int p = 0; p < n_particles; ++p) {
        mean += phi.f(cfg.subspan(static_cast<std::size_t>(p * d), static_cast<std::size_t>(d)));
      }
      const double diff = mean / n_particles - expectation;
      sq[s] = diff * diff;
    });
    const double mean = sample_mean(sq);
    out.push_back({mean, sample_stddev(sq, mean) / std::sqrt(static_cast<double>(sq.size()))});
  }
  return out;
}

namespace {

ChaosRow sweep_row(const SweepConfig& cfg, int n, const gp::GpSolution& gp_sol, const core::ScalarField& rho_gp,
                   const std::vector<TestFunction>& phis) {
  ChaosRow row;
  row.n = n;
  const int d = cfg.d;
  std::optional<scattering::PairPotential> pair;
  if (cfg.interacting) pair = scattering::PairPotential::gaussian(cfg.pair_amplitude / n, cfg.pair_width);
  const auto problem =
      nbody::NBodyProblem::make(n, d, gp::Trap::from_name(cfg.trap), pair, cfg.grid_L, cfg.grid_n);
  nbody::GroundStateOptions gs_opts;
  gs_opts.tol = cfg.tol;
  const auto gs = nbody::ground_state(problem, gs_opts);
  row.energy = gs.per_particle_energy();

  const auto& rho = gs.rho;
  const auto ref = core::tensor_power(rho_gp, n);
  const auto marg1 = core::marginalize(rho, 1, d);
  const auto marg2 = core::marginalize(rho, 2, d);
  const std::uint64_t sample_seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(n);

  row.w1_marg1 = d == 1 ? wasserstein(marg1, rho_gp, 1, cfg.metric)
                        : sampled_wasserstein(marg1, rho_gp, d, 1, cfg.w2_samples, sample_seed, 0, cfg.metric).value;
  const auto w1m2 = sampled_wasserstein(marg2, core::tensor_power(rho_gp, 2), d, 1, cfg.w2_samples, sample_seed,
                                        cfg.bootstrap, cfg.metric);
  row.w1_marg2 = w1m2.value;
  row.w1_marg2_std_error = w1m2.std_error;

  row.entropy_hn = entropy(rho, 4.0, d);
  row.entropy_ref = entropy(ref, 4.0, d);
  row.relative_entropy = relative_entropy(rho, ref, d);
  row.fisher = fisher_information(rho, nullptr, d);
  row.relative_fisher = fisher_information(rho, &ref, d);
  row.tv_marg1 = total_variation(marg1, rho_gp);

  HwiOptions hwi_opts;
  hwi_opts.samples = cfg.w2_samples;
  hwi_opts.resamples = cfg.bootstrap;
  hwi_opts.seed = sample_seed;
  hwi_opts.convex_trap = cfg.trap == "harmonic" || cfg.trap == "quartic";
  const auto hwi = hwi_report(rho, ref, n, hwi_opts);
  row.hwi_slack = hwi.hwi_slack;
  row.w2 = hwi.w2;
  row.w2_std_error = hwi.w2_std_error;
  row.entropy_gap = hwi.entropy_gap;
  row.entropy_distance_slack = hwi.entropy_distance_slack;

  row.marginal_entropy = raw_entropy(marg1);
  row.chain_rule_gap = row.entropy_hn - row.marginal_entropy;
  const int split = n / 2;
  std::vector<int> first(static_cast<std::size_t>(split)), second(static_cast<std::size_t>(n - split));
  std::iota(first.begin(), first.end(), 0);
  std::iota(second.begin(), second.end(), split);
  row.superadditivity_gap = raw_entropy(rho) - raw_entropy(core::marginalize_particles(rho, first, d)) -
                            raw_entropy(core::marginalize_particles(rho, second, d));
  const double ck_marg = std::sqrt(0.5 * relative_entropy(marg1, rho_gp)) - row.tv_marg1;
  const double ck_joint = std::sqrt(0.5 * n * row.relative_entropy) - total_variation(rho, ref);
  row.csiszar_kullback_slack = std::min(ck_marg, ck_joint);

  {
    const auto xs = core::DensitySampler(rho).draw_many(sample_seed + 7, cfg.w2_samples);
    const auto ys = core::DensitySampler(ref).draw_many(sample_seed + 7, cfg.w2_samples);
    row.w1_w2_holds = w1_w2_bound_check(xs, ys, 4.0, d, cfg.metric).holds;
  }

  // Nelson diffusion of the ground state against the product GP drift.
  const auto b = diffusion::Drift::from_field(gs.drift());
  const auto u = diffusion::Drift::per_particle(diffusion::Drift::from_field(gp::gp_drift(gp_sol)), n);
  diffusion::SimParams params = cfg.sim;
  params.seed = cfg.seed * 1000003ULL + 1000ULL + static_cast<std::uint64_t>(n);
  diffusion::SimOptions sim_opts;
  sim_opts.half_width = cfg.grid_L;
  const auto ens = diffusion::simulate(b, diffusion::InitialLaw::from_density(rho), params, sim_opts);
  const auto stop = diffusion::stopping_times(ens, n, d, cfg.radius_law);
  row.radius = stop.radius;
  const auto surv = diffusion::survival_probability(stop, cfg.survival_t);
  row.survival_at_t = surv.value;
  row.survival_std_error = surv.std_error;
  const auto pe = diffusion::path_relative_entropy(ens, b, u, cfg.survival_t, n);
  row.per_particle_path_entropy = pe.per_particle;
  row.path_entropy_std_error = pe.std_error / n;

  const int k_t = static_cast<int>(std::lround(cfg.survival_t / params.dt));
  std::vector<double> stopped(static_cast<std::size_t>(params.n_paths));
  core::parallel_for(stopped.size(), [&](std::size_t p) {
    const int k_tau = static_cast<int>(std::lround(std::min(stop.tau[p], stop.never()) / params.dt));
    const int k_end = std::min(k_tau, k_t);
    std::vector<double> uv(static_cast<std::size_t>(u.dim()));
    double s = 0.0;
    for (int k = 0; k < k_end; ++k) {
      u(ens.position(p, k), uv);
      const auto bk = ens.drift(p, k);
      for (std::size_t c = 0; c < uv.size(); ++c) s += (bk[c] - uv[c]) * (bk[c] - uv[c]);
    }
    stopped[p] = 0.5 * s * params.dt;
  });
  row.stopped_path_entropy = sample_mean(stopped) / n;

  row.concentration = empirical_concentration(ens.snapshot(k_t), n, rho_gp, phis);
  return row;
}

}  // namespace

ChaosReport chaos_sweep(const SweepConfig& config) {
  require(!config.n_values.empty(), ErrorKind::kValidation, "no particle numbers given", "n_values");
  for (std::size_t i = 0; i < config.n_values.size(); ++i) {
    require(config.n_values[i] >= 2, ErrorKind::kValidation, "sweep particle numbers must be at least 2", "n_values");
    require(i == 0 || config.n_values[i] > config.n_values[i - 1], ErrorKind::kValidation,
            "sweep particle numbers must be strictly increasing", "n_values");
  }
  require(config.d >= 1, ErrorKind::kValidation, "d must be positive", "d");
  require(config.grid_L > 0.0, ErrorKind::kValidation, "grid half width must be positive", "grid_L");
  require(config.grid_n >= 5, ErrorKind::kValidation, "grid needs at least 5 points per axis", "grid_n");
  require(config.tol > 0.0, ErrorKind::kValidation, "tol must be positive", "tol");
  require(config.survival_t >= 0.0 && config.survival_t <= config.sim.horizon, ErrorKind::kValidation,
          "survival time must lie in [0, T]", "survival_t");
  require(config.pair_width > 0.0, ErrorKind::kValidation, "pair width must be positive", "pair_width");
  require(config.pair_amplitude >= 0.0, ErrorKind::kValidation, "pair amplitude must be nonnegative",
          "pair_amplitude");
  check_metric(config.metric);
  config.sim.steps();

  ChaosReport report;
  report.label = config.interacting
                     ? (config.d == 1 ? "1D mean-field analog" : std::to_string(config.d) + "D mean-field analog")
                     : "non-interacting";

  gp::GpProblem gp_problem{gp::Trap::from_name(config.trap), 0.0, config.d,
                           core::Grid(config.d, config.grid_L, config.grid_n), std::nullopt};
  if (config.interacting) gp_problem.kernel = scattering::PairPotential::gaussian(config.pair_amplitude, config.pair_width);
  gp::GpOptions gp_opts;
  gp_opts.tol = 1e-9;
  const auto gp_sol = gp::minimize_gp(gp_problem, gp_opts);
  const auto rho_gp = gp_sol.density();
  report.log_concavity_defect = core::log_concavity_defect(rho_gp);

  const auto phis = default_test_functions(config.d);
  for (const auto& phi : phis) report.test_function_names.push_back(phi.name);

  for (int n : config.n_values) {
    try {
      report.rows.push_back(sweep_row(config, n, gp_sol, rho_gp, phis));
    } catch (const Error& e) {
      ChaosRow row;
      row.n = n;
      row.failed = true;
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace gpchaos::chaos
