#include "gpchaos/diffusion/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::diffusion {
namespace {

// Mirror a coordinate back into [-L, L]; returns true if it moved.
bool reflect(double& x, double half_width) {
  bool moved = false;
  while (x > half_width || x < -half_width) {
    x = x > half_width ? 2.0 * half_width - x : -2.0 * half_width - x;
    moved = true;
  }
  return moved;
}

}  // namespace

int SimParams::steps() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::kValidation, "dt must be positive", "dt");
  require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::kValidation, "T must be positive", "T");
  require(dt <= horizon, ErrorKind::kValidation, "dt must not exceed T", "dt");
  require(n_paths >= 1, ErrorKind::kValidation, "paths must be positive", "paths");
  const double ratio = horizon / dt;
  const double k = std::round(ratio);
  require(std::abs(ratio - k) <= 1e-9 * k, ErrorKind::kValidation, "T/dt must be an integer", "dt");
  return static_cast<int>(k);
}

Drift Drift::from_field(const core::VectorField& field) {
  require(field.components() == field.grid().dim(), ErrorKind::kDimensionMismatch,
          "drift field needs one component per axis");
  auto values = std::make_shared<std::vector<double>>(field.values().begin(), field.values().end());
  const core::Interpolator interp(field.grid());
  const int comps = field.components();
  return Drift(field.grid().dim(), [values, interp, comps](std::span<const double> x, std::span<double> out) {
    interp.evaluate(*values, comps, x, out);
  });
}

Drift Drift::from_function(int dim, Function f) {
  require(dim >= 1 && static_cast<bool>(f), ErrorKind::kInvalidArgument, "drift needs a dimension and a function");
  return Drift(dim, std::move(f));
}

Drift Drift::zero(int dim) {
  return from_function(dim, [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  });
}

Drift Drift::ornstein_uhlenbeck(int dim, double kappa) {
  return from_function(dim, [kappa](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -kappa * x[i];
  });
}

Drift Drift::per_particle(const Drift& one, int n_particles) {
  require(n_particles >= 1, ErrorKind::kInvalidArgument, "N must be positive", "N");
  const auto d = static_cast<std::size_t>(one.dim());
  return from_function(one.dim() * n_particles, [one, d, n_particles](std::span<const double> x, std::span<double> out) {
    for (int p = 0; p < n_particles; ++p) one(x.subspan(p * d, d), out.subspan(p * d, d));
  });
}

InitialLaw InitialLaw::from_density(const core::ScalarField& rho) {
  InitialLaw law;
  law.dim_ = rho.grid().dim();
  law.sampler_.emplace(rho);
  return law;
}

InitialLaw InitialLaw::point(std::vector<double> x) {
  require(!x.empty(), ErrorKind::kInvalidArgument, "initial point needs at least one coordinate");
  InitialLaw law;
  law.dim_ = static_cast<int>(x.size());
  law.point_ = std::move(x);
  return law;
}

InitialLaw InitialLaw::gaussian(int dim, double variance) {
  require(dim >= 1, ErrorKind::kInvalidArgument, "dimension must be positive", "dim");
  require(variance > 0.0, ErrorKind::kInvalidArgument, "variance must be positive", "variance");
  InitialLaw law;
  law.dim_ = dim;
  law.sigma_ = std::sqrt(variance);
  return law;
}

void InitialLaw::draw(core::Rng& rng, std::span<double> out) const {
  if (sampler_) {
    sampler_->draw(rng, out);
  } else if (sigma_ > 0.0) {
    for (double& v : out) v = sigma_ * core::standard_normal(rng);
  } else {
    std::copy(point_.begin(), point_.end(), out.begin());
  }
}

std::span<const double> PathEnsemble::position(std::size_t path, int step) const {
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t offset = (path * times.size() + static_cast<std::size_t>(step)) * d;
  return std::span<const double>(positions).subspan(offset, d);
}

std::span<const double> PathEnsemble::drift(std::size_t path, int step) const {
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t offset = (path * times.size() + static_cast<std::size_t>(step)) * d;
  return std::span<const double>(drift_samples).subspan(offset, d);
}

core::SampleSet PathEnsemble::snapshot(int step) const {
  const auto d = static_cast<std::size_t>(dim);
  const auto paths = static_cast<std::size_t>(params.n_paths);
  std::vector<double> coords(paths * d);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto x = position(p, step);
    std::copy(x.begin(), x.end(), coords.begin() + static_cast<std::ptrdiff_t>(p * d));
  }
  return core::SampleSet(dim, std::move(coords));
}

PathEnsemble simulate(const Drift& drift, const InitialLaw& initial, const SimParams& params,
                      const SimOptions& options) {
  const int steps = params.steps();
  require(drift.dim() == initial.dim(), ErrorKind::kDimensionMismatch,
          "drift and initial law have different dimensions", "dim");
  const auto d = static_cast<std::size_t>(drift.dim());
  const auto paths = static_cast<std::size_t>(params.n_paths);
  const auto stride = static_cast<std::size_t>(steps + 1) * d;

  PathEnsemble ens;
  ens.dim = drift.dim();
  ens.params = params;
  ens.times.resize(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) ens.times[static_cast<std::size_t>(k)] = k * params.dt;
  ens.positions.assign(paths * stride, 0.0);
  ens.drift_samples.assign(paths * stride, 0.0);
  std::vector<std::size_t> escapes(paths, 0);
  const double sqrt_dt = std::sqrt(params.dt);
  const double wall = options.half_width;
  const bool boxed = std::isfinite(wall);

  core::parallel_for(paths, [&](std::size_t p) {
    core::Rng rng = core::make_stream(params.seed, p);
    double* x = ens.positions.data() + p * stride;
    double* b = ens.drift_samples.data() + p * stride;
    initial.draw(rng, std::span<double>(x, d));
    for (int k = 0; k <= steps; ++k) {
      double* xk = x + static_cast<std::size_t>(k) * d;
      double* bk = b + static_cast<std::size_t>(k) * d;
      drift(std::span<const double>(xk, d), std::span<double>(bk, d));
      if (k == steps) break;
      double* next = xk + d;
      bool hit = false;
      for (std::size_t c = 0; c < d; ++c) {
        next[c] = xk[c] + bk[c] * params.dt + sqrt_dt * core::standard_normal(rng);
        if (boxed) hit = reflect(next[c], wall) || hit;
      }
      if (hit) ++escapes[p];
    }
  });

  for (std::size_t e : escapes) ens.escapes += e;
  if (boxed) {
    const double fraction = static_cast<double>(ens.escapes) / (static_cast<double>(paths) * steps);
    require(fraction <= options.max_escape_fraction, ErrorKind::kDomainEscape,
            std::to_string(ens.escapes) + " reflections at the box wall (" + std::to_string(100.0 * fraction) +
                "% of steps); enlarge the grid",
            "grid_L");
  }
  return ens;
}

double RadiusLaw::radius(int n_particles, double dt) const {
  require(n_particles >= 1, ErrorKind::kInvalidArgument, "N must be positive", "N");
  double r = fixed ? *fixed : prefactor * std::pow(static_cast<double>(n_particles), -(base_exponent + delta));
  require(r >= 0.0 && std::isfinite(r), ErrorKind::kValidation, "radius must be nonnegative", "radius");
  return r * (1.0 + inflation * std::sqrt(dt));
}

StoppingRecord stopping_times(const PathEnsemble& ensemble, int n_particles, int d, const RadiusLaw& law) {
  require(n_particles >= 2, ErrorKind::kInvalidArgument, "stopping times need N >= 2", "N");
  require(ensemble.dim == n_particles * d, ErrorKind::kDimensionMismatch, "ensemble dimension must equal N*d", "d");
  StoppingRecord rec;
  rec.radius = law.radius(n_particles, ensemble.params.dt);
  rec.delta = law.delta;
  rec.horizon = ensemble.params.horizon;
  rec.dt = ensemble.params.dt;
  const auto paths = static_cast<std::size_t>(ensemble.params.n_paths);
  rec.tau.assign(paths, rec.never());
  if (rec.radius == 0.0) return rec;
  const double r2 = rec.radius * rec.radius;
  const auto dd = static_cast<std::size_t>(d);
  core::parallel_for(paths, [&](std::size_t p) {
    for (int k = 0; k <= ensemble.steps(); ++k) {
      const auto x = ensemble.position(p, k);
      for (int j = 1; j < n_particles; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dd; ++c) {
          const double t = x[c] - x[static_cast<std::size_t>(j) * dd + c];
          s += t * t;
        }
        if (s < r2) {
          rec.tau[p] = ensemble.times[static_cast<std::size_t>(k)];
          return;
        }
      }
    }
  });
  return rec;
}

Estimate survival_probability(const StoppingRecord& record, double t) {
  require(t >= 0.0 && t <= record.horizon + 1e-12, ErrorKind::kInvalidArgument, "t must lie in [0, T]", "t");
  require(!record.tau.empty(), ErrorKind::kInvalidArgument, "empty stopping record");
  std::size_t alive = 0;
  // Stopping happens on the time grid; compare against the grid time at or below t.
  const double grid_t = std::floor(t / record.dt + 1e-9) * record.dt;
  for (double tau : record.tau) alive += tau >= grid_t - 1e-12 * record.horizon ? 1 : 0;
  const double n = static_cast<double>(record.tau.size());
  const double p = static_cast<double>(alive) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

PathEntropy path_relative_entropy(const PathEnsemble& ensemble, const Drift& b, const Drift& u, double t,
                                  int n_particles) {
  require(b.dim() == ensemble.dim && u.dim() == ensemble.dim, ErrorKind::kDimensionMismatch,
          "drift dimensions do not match the ensemble");
  require(t >= 0.0 && t <= ensemble.params.horizon + 1e-12, ErrorKind::kInvalidArgument, "t must lie in [0, T]",
          "t");
  require(n_particles >= 1, ErrorKind::kInvalidArgument, "N must be positive", "N");
  const int upto = static_cast<int>(std::lround(t / ensemble.params.dt));
  const auto d = static_cast<std::size_t>(ensemble.dim);
  const auto paths = static_cast<std::size_t>(ensemble.params.n_paths);
  std::vector<double> per_path(paths, 0.0);
  core::parallel_for(paths, [&](std::size_t p) {
    std::vector<double> bv(d), uv(d);
    double s = 0.0;
    for (int k = 0; k < upto; ++k) {
      const auto x = ensemble.position(p, k);
      b(x, bv);
      u(x, uv);
      for (std::size_t c = 0; c < d; ++c) s += (bv[c] - uv[c]) * (bv[c] - uv[c]);
    }
    per_path[p] = 0.5 * s * ensemble.params.dt;
  });
  const double mean = core::pairwise_sum(per_path) / static_cast<double>(paths);
  std::vector<double> dev(paths);
  for (std::size_t p = 0; p < paths; ++p) dev[p] = (per_path[p] - mean) * (per_path[p] - mean);
  const double var = paths > 1 ? core::pairwise_sum(dev) / static_cast<double>(paths - 1) : 0.0;
  return {mean, mean / n_particles, std::sqrt(var / static_cast<double>(paths))};
}

double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;  // the series is numerically 1 here
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), ErrorKind::kInvalidArgument, "KS test needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace gpchaos::diffusion
