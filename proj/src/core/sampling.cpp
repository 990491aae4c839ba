#include "gpchaos/core/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::core {

Rng make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits, shifted by half an ulp so the result lies in (0, 1).
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void Interpolator::evaluate(std::span<const double> node_values, int components, std::span<const double> x,
                            std::span<double> out) const {
  const int dim = grid_.dim();
  const int n = grid_.points_per_axis();
  const double h = grid_.spacing();
  std::size_t base = 0;
  double frac[kMaxDim];
  for (int a = 0; a < dim; ++a) {
    double t = (x[static_cast<std::size_t>(a)] + grid_.half_width()) / h;
    t = std::clamp(t, 0.0, static_cast<double>(n - 1));
    int i0 = std::min(static_cast<int>(t), n - 2);
    frac[a] = t - i0;
    base += static_cast<std::size_t>(i0) * grid_.stride(a);
  }
  const auto nc = static_cast<std::size_t>(components);
  std::fill(out.begin(), out.begin() + components, 0.0);
  for (unsigned corner = 0; corner < (1u << dim); ++corner) {
    double w = 1.0;
    std::size_t flat = base;
    for (int a = 0; a < dim; ++a) {
      if (corner & (1u << a)) {
        w *= frac[a];
        flat += grid_.stride(a);
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w == 0.0) continue;
    for (std::size_t c = 0; c < nc; ++c) out[c] += w * node_values[flat * nc + c];
  }
}

double Interpolator::evaluate(std::span<const double> node_values, std::span<const double> x) const {
  double v = 0.0;
  evaluate(node_values, 1, x, std::span<double>(&v, 1));
  return v;
}

DensitySampler::DensitySampler(const ScalarField& rho)
    : grid_(rho.grid()), values_(rho.values().begin(), rho.values().end()) {
  require(rho.min() >= 0.0, ErrorKind::kInvalidArgument, "sampling needs a nonnegative density");
  value_bound_ = rho.max();
  require(value_bound_ > 0.0, ErrorKind::kInvalidArgument, "sampling needs a density with positive mass");
  const int n = grid_.points_per_axis();
  const double h = grid_.spacing();
  if (grid_.dim() == 1) {
    cumulative_.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i < n; ++i) {
      cumulative_[static_cast<std::size_t>(i)] =
          cumulative_[static_cast<std::size_t>(i) - 1] +
          0.5 * h * (values_[static_cast<std::size_t>(i) - 1] + values_[static_cast<std::size_t>(i)]);
    }
    const double total = cumulative_.back();
    for (double& c : cumulative_) c /= total;
    for (double& v : values_) v /= total;
    return;
  }
  // Support box of the interpolant: cells touching a positive node.
  std::vector<int> lo(static_cast<std::size_t>(grid_.dim()), n - 1);
  std::vector<int> hi(static_cast<std::size_t>(grid_.dim()), 0);
  std::vector<int> idx(static_cast<std::size_t>(grid_.dim()));
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (values_[i] <= 0.0) continue;
    grid_.unravel(i, idx);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      lo[a] = std::min(lo[a], idx[a]);
      hi[a] = std::max(hi[a], idx[a]);
    }
  }
  for (std::size_t a = 0; a < idx.size(); ++a) {
    box_low_.push_back(grid_.coordinate(std::max(lo[a] - 1, 0)));
    box_high_.push_back(grid_.coordinate(std::min(hi[a] + 1, n - 1)));
  }
}

double DensitySampler::cdf(double x) const {
  require(grid_.dim() == 1, ErrorKind::kDimensionMismatch, "cdf is only defined for 1D densities");
  const int n = grid_.points_per_axis();
  const double h = grid_.spacing();
  if (x <= grid_.coordinate(0)) return 0.0;
  if (x >= grid_.coordinate(n - 1)) return 1.0;
  const int j = std::min(static_cast<int>((x - grid_.coordinate(0)) / h), n - 2);
  const double s = x - grid_.coordinate(j);
  const double a = values_[static_cast<std::size_t>(j)];
  const double b = values_[static_cast<std::size_t>(j) + 1];
  return cumulative_[static_cast<std::size_t>(j)] + a * s + 0.5 * (b - a) * s * s / h;
}

void DensitySampler::draw(Rng& rng, std::span<double> out) const {
  if (grid_.dim() == 1) {
    const double u = uniform01(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    int j = static_cast<int>(it - cumulative_.begin()) - 1;
    j = std::clamp(j, 0, grid_.points_per_axis() - 2);
    const double m = u - cumulative_[static_cast<std::size_t>(j)];
    const double a = values_[static_cast<std::size_t>(j)];
    const double b = values_[static_cast<std::size_t>(j) + 1];
    const double h = grid_.spacing();
    // Solve a*s + (b-a)*s^2/(2h) = m in the stable root form.
    const double disc = std::max(a * a + 2.0 * (b - a) * m / h, 0.0);
    const double denom = a + std::sqrt(disc);
    double s = denom > 0.0 ? 2.0 * m / denom : 0.0;
    s = std::clamp(s, 0.0, h);
    out[0] = grid_.coordinate(j) + s;
    return;
  }
  Interpolator interp(grid_);
  const std::size_t dim = static_cast<std::size_t>(grid_.dim());
  for (;;) {
    for (std::size_t a = 0; a < dim; ++a) {
      out[a] = box_low_[a] + (box_high_[a] - box_low_[a]) * uniform01(rng);
    }
    const double v = interp.evaluate(values_, out);
    if (uniform01(rng) * value_bound_ < v) return;
  }
}

SampleSet DensitySampler::draw_many(std::uint64_t seed, std::size_t count) const {
  const auto dim = static_cast<std::size_t>(grid_.dim());
  std::vector<double> coords(count * dim);
  parallel_for(count, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    draw(rng, std::span<double>(coords).subspan(i * dim, dim));
  });
  return SampleSet(static_cast<int>(dim), std::move(coords));
}

}  // namespace gpchaos::core
