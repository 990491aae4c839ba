#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gpchaos/core/grid.hpp"
#include "gpchaos/core/sampling.hpp"

namespace gpchaos::diffusion {

struct SimParams {
  double dt = 0.01;
  double horizon = 1.0;  // T
  int n_paths = 1000;
  std::uint64_t seed = 0;

  /// Validates dt <= T and that T/dt is an integer; returns the step count.
  int steps() const;
};

/// Drift b(x) on R^dim, either a grid field (multilinear interpolation,
/// clamped to the box) or an arbitrary callable.
class Drift {
 public:
  using Function = std::function<void(std::span<const double>, std::span<double>)>;

  static Drift from_field(const core::VectorField& field);
  static Drift from_function(int dim, Function f);
  static Drift zero(int dim);
  /// b(x) = -kappa x
  static Drift ornstein_uhlenbeck(int dim, double kappa = 1.0);
  /// Applies a one-particle drift of dimension d to each of the N blocks of x.
  static Drift per_particle(const Drift& one, int n_particles);

  int dim() const { return dim_; }
  void operator()(std::span<const double> x, std::span<double> out) const { fn_(x, out); }

 private:
  Drift(int dim, Function f) : dim_(dim), fn_(std::move(f)) {}
  int dim_;
  Function fn_;
};

/// Initial law: a grid density (sampled exactly in 1D, by rejection otherwise),
/// iid centred normals, or a fixed point.
class InitialLaw {
 public:
  static InitialLaw from_density(const core::ScalarField& rho);
  static InitialLaw point(std::vector<double> x);
  static InitialLaw gaussian(int dim, double variance);

  int dim() const { return dim_; }
  void draw(core::Rng& rng, std::span<double> out) const;

 private:
  int dim_ = 0;
  std::optional<core::DensitySampler> sampler_;
  std::vector<double> point_;
  double sigma_ = 0.0;
};

struct SimOptions {
  /// Paths are reflected at +-half_width; infinity disables the box.
  double half_width = std::numeric_limits<double>::infinity();
  /// Fraction of (path, step) pairs allowed to hit the wall before DomainEscape.
  double max_escape_fraction = 1e-3;
};

struct PathEnsemble {
  int dim = 0;
  SimParams params;
  std::vector<double> times;          // steps + 1 values
  std::vector<double> positions;      // [path][step][dim]
  std::vector<double> drift_samples;  // b evaluated at positions, same layout
  std::size_t escapes = 0;            // reflections performed

  int steps() const { return static_cast<int>(times.size()) - 1; }
  std::span<const double> position(std::size_t path, int step) const;
  std::span<const double> drift(std::size_t path, int step) const;
  /// All paths at one step, as a sample set.
  core::SampleSet snapshot(int step) const;
};

/// Euler-Maruyama X_{k+1} = X_k + b(X_k) dt + sqrt(dt) xi_k with unit noise.
/// Path p uses the stream make_stream(seed, p) for its initial draw and noise.
PathEnsemble simulate(const Drift& drift, const InitialLaw& initial, const SimParams& params,
                      const SimOptions& options = {});

/// Ball radius law r(N) = prefactor * N^{-(base_exponent + delta)}, optionally
/// inflated to r (1 + inflation sqrt(dt)). The default is the three-dimensional
/// N^{-1/3 - delta}; `fixed` overrides the law with a constant radius.
struct RadiusLaw {
  double prefactor = 1.0;
  double base_exponent = 1.0 / 3.0;
  double delta = 4.0 / 51.0;
  double inflation = 0.0;
  std::optional<double> fixed;

  double radius(int n_particles, double dt = 0.0) const;
};

struct StoppingRecord {
  std::vector<double> tau;  // first grid time of entry; horizon + dt if never
  double radius = 0.0;
  double delta = 0.0;
  double horizon = 0.0;
  double dt = 0.0;

  double never() const { return horizon + dt; }
};

/// tau = first grid time with |Y_1 - Y_j| < radius for some j >= 2.
StoppingRecord stopping_times(const PathEnsemble& ensemble, int n_particles, int d, const RadiusLaw& law = {});

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Fraction of paths with tau >= t, binomial standard error.
Estimate survival_probability(const StoppingRecord& record, double t);

struct PathEntropy {
  double total = 0.0;
  double per_particle = 0.0;
  double std_error = 0.0;  // of total
};

/// (1/2) mean over paths of sum_{k < t/dt} |b(X_k) - u(X_k)|^2 dt.
PathEntropy path_relative_entropy(const PathEnsemble& ensemble, const Drift& b, const Drift& u, double t,
                                  int n_particles);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

}  // namespace gpchaos::diffusion
