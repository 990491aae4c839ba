#include "gpchaos/core/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::core {
namespace {

double norm_pow(std::span<const double> x, double k) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (k == 0.0) return 1.0;
  return std::pow(std::sqrt(r2), k);
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double integrate_nodes(const Grid& grid, std::span<const double> values) {
  require(values.size() == grid.size(), ErrorKind::kDimensionMismatch, "node values do not match grid");
  return deterministic_sum(grid.size(), [&](std::size_t i) { return grid.weight(i) * values[i]; });
}

double integrate(const ScalarField& field) { return integrate_nodes(field.grid(), field.values()); }

double node_inner_product(const Grid& grid, std::span<const double> a, std::span<const double> b) {
  return grid.cell_volume() * deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double moment(const ScalarField& rho, double k) {
  const Grid& g = rho.grid();
  return deterministic_sum(g.size(), [&](std::size_t i) {
    double x[16];
    std::span<double> xs(x, static_cast<std::size_t>(g.dim()));
    g.point(i, xs);
    return g.weight(i) * norm_pow(xs, k) * rho[i];
  });
}

double moment(const SampleSet& samples, double k) {
  std::vector<double> terms(samples.count());
  for (std::size_t i = 0; i < samples.count(); ++i) terms[i] = norm_pow(samples.point(i), k);
  return pairwise_sum(terms) / static_cast<double>(samples.count());
}

double moment_tail_fraction(const ScalarField& rho, double k, double shell_fraction) {
  const Grid& g = rho.grid();
  const double cut = shell_fraction * g.half_width();
  const double total = moment(rho, k);
  const double shell = deterministic_sum(g.size(), [&](std::size_t i) {
    double x[16];
    std::span<double> xs(x, static_cast<std::size_t>(g.dim()));
    g.point(i, xs);
    const bool outer = std::any_of(xs.begin(), xs.end(), [&](double v) { return std::abs(v) > cut; });
    return outer ? g.weight(i) * norm_pow(xs, k) * rho[i] : 0.0;
  });
  if (total <= 0.0) return 0.0;
  return shell / total;
}

ScalarField marginalize_particles(const ScalarField& rho_joint, std::span<const int> kept, int d) {
  const Grid& g = rho_joint.grid();
  require(d >= 1 && g.dim() % d == 0, ErrorKind::kDimensionMismatch,
          "joint dimension is not a multiple of the particle dimension");
  const int n_particles = g.dim() / d;
  require(!kept.empty() && static_cast<int>(kept.size()) <= n_particles, ErrorKind::kDimensionMismatch,
          "cannot keep more particles than the joint density holds");
  std::vector<bool> is_kept(static_cast<std::size_t>(n_particles), false);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    require(kept[i] >= 0 && kept[i] < n_particles, ErrorKind::kDimensionMismatch, "particle index out of range");
    require(i == 0 || kept[i] > kept[i - 1], ErrorKind::kInvalidArgument, "kept particles must be sorted");
    is_kept[static_cast<std::size_t>(kept[i])] = true;
  }

  std::vector<int> kept_axes;
  std::vector<int> dropped_axes;
  for (int p = 0; p < n_particles; ++p) {
    for (int c = 0; c < d; ++c) (is_kept[static_cast<std::size_t>(p)] ? kept_axes : dropped_axes).push_back(p * d + c);
  }

  const auto n = static_cast<std::size_t>(g.points_per_axis());
  // Offsets and trapezoid weights of every combination of dropped-axis indices.
  const std::size_t combos = ipow(n, static_cast<int>(dropped_axes.size()));
  std::vector<std::size_t> offset(combos, 0);
  std::vector<double> weight(combos, 1.0);
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t rest = c;
    for (int k = static_cast<int>(dropped_axes.size()) - 1; k >= 0; --k) {
      const int idx = static_cast<int>(rest % n);
      rest /= n;
      offset[c] += static_cast<std::size_t>(idx) * g.stride(dropped_axes[static_cast<std::size_t>(k)]);
      weight[c] *= g.axis_weight(idx);
    }
  }

  Grid out_grid = g.with_dim(static_cast<int>(kept_axes.size()));
  std::vector<double> out(out_grid.size());
  parallel_for(out.size(), [&](std::size_t o) {
    std::size_t rest = o;
    std::size_t base = 0;
    for (int k = static_cast<int>(kept_axes.size()) - 1; k >= 0; --k) {
      base += (rest % n) * g.stride(kept_axes[static_cast<std::size_t>(k)]);
      rest /= n;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < combos; ++c) s += weight[c] * rho_joint[base + offset[c]];
    out[o] = s;
  });
  return ScalarField(std::move(out_grid), std::move(out));
}

ScalarField marginalize(const ScalarField& rho_joint, int n_kept, int d) {
  require(n_kept >= 1, ErrorKind::kDimensionMismatch, "must keep at least one particle");
  require(d >= 1 && n_kept * d <= rho_joint.grid().dim(), ErrorKind::kDimensionMismatch,
          "kept axes exceed the joint dimension");
  std::vector<int> kept(static_cast<std::size_t>(n_kept));
  std::iota(kept.begin(), kept.end(), 0);
  return marginalize_particles(rho_joint, kept, d);
}

ScalarField tensor_power(const ScalarField& rho, int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "tensor power needs n >= 1");
  const Grid& g = rho.grid();
  Grid joint = g.with_dim(g.dim() * n);
  const std::size_t block = g.size();
  std::vector<double> v(joint.size());
  parallel_for(v.size(), [&](std::size_t i) {
    std::size_t rest = i;
    double p = 1.0;
    for (int k = 0; k < n; ++k) {
      p *= rho[rest % block];
      rest /= block;
    }
    v[i] = p;
  });
  return ScalarField(std::move(joint), std::move(v));
}

ScalarField tensor_product(const ScalarField& a, const ScalarField& b) {
  const Grid& ga = a.grid();
  const Grid& gb = b.grid();
  require(ga.points_per_axis() == gb.points_per_axis() && ga.half_width() == gb.half_width(),
          ErrorKind::kDimensionMismatch, "tensor product needs matching axis grids");
  Grid joint = ga.with_dim(ga.dim() + gb.dim());
  std::vector<double> v(joint.size());
  const std::size_t nb = gb.size();
  parallel_for(v.size(), [&](std::size_t i) { v[i] = a[i / nb] * b[i % nb]; });
  return ScalarField(std::move(joint), std::move(v));
}

ScalarField permute_particles(const ScalarField& rho_joint, std::span<const int> perm, int d) {
  const Grid& g = rho_joint.grid();
  require(d >= 1 && g.dim() % d == 0, ErrorKind::kDimensionMismatch, "joint dimension not a multiple of d");
  const int n_particles = g.dim() / d;
  require(static_cast<int>(perm.size()) == n_particles, ErrorKind::kDimensionMismatch,
          "permutation length must equal the particle count");
  const std::size_t block = ipow(static_cast<std::size_t>(g.points_per_axis()), d);
  std::vector<double> v(g.size());
  parallel_for(v.size(), [&](std::size_t i) {
    std::size_t blocks[16];
    std::size_t rest = i;
    for (int p = n_particles - 1; p >= 0; --p) {
      blocks[p] = rest % block;
      rest /= block;
    }
    std::size_t src = 0;
    for (int p = 0; p < n_particles; ++p) src = src * block + blocks[perm[static_cast<std::size_t>(p)]];
    v[i] = rho_joint[src];
  });
  return ScalarField(g, std::move(v));
}

}  // namespace gpchaos::core
