#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpchaos/core/derivatives.hpp"
#include "gpchaos/core/grid.hpp"
#include "gpchaos/diffusion/diffusion.hpp"
#include "gpchaos/gp/gp.hpp"
#include "gpchaos/scattering/scattering.hpp"

namespace gpchaos::chaos {

inline constexpr std::size_t kMaxAssignment = 1024;

enum class MetricKind { kTruncatedEuclidean, kEuclidean };

/// Ground distance d_E on one particle's coordinates.
struct Metric {
  MetricKind kind = MetricKind::kTruncatedEuclidean;
  double truncation = 1.0;

  double operator()(std::span<const double> x, std::span<const double> y) const;
  static Metric euclidean() { return {MetricKind::kEuclidean, 1.0}; }
};

/// Minimum-cost perfect matching on a dense n x n cost matrix (row-major).
/// Returns column assigned to each row.
std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n);

/// Exact W_1 (order 1) or W_2 (order 2) between equal-size sample sets. A point
/// is a configuration of dim / particle_dim particles; the cost is the
/// normalized (1/n) sum_i d_E(x_i, y_i), with |x_i - y_i|^2 for order 2, and
/// W_2 is the square root of the optimal cost. particle_dim = 0 treats the whole
/// point as one particle.
double wasserstein(const core::SampleSet& a, const core::SampleSet& b, int order, const Metric& metric = {},
                   int particle_dim = 0);

/// Exact W_1 / W_2 between two 1D grid densities, viewed as node masses
/// (trapezoid weight times value). Order 2 uses the quantile coupling; order 1
/// with a truncated metric solves the transport problem on the line exactly.
double wasserstein(const core::ScalarField& a, const core::ScalarField& b, int order, const Metric& metric = {});

struct BoundCheck {
  double w1 = 0.0;
  double w2 = 0.0;
  double moment_sum = 0.0;  // M_k(F_1) + M_k(G_1)
  double rhs = 0.0;         // 2^{3/2} M^{1/k} W_1^{1/2 - 1/k}
  bool holds = false;       // W_1 <= W_2 <= rhs
};

BoundCheck w1_w2_bound_check(const core::SampleSet& f, const core::SampleSet& g, double k, int particle_dim = 0,
                             const Metric& metric = {});

/// Number of particles in a joint density over N*d axes.
int particles_of(const core::ScalarField& rho, int d);

/// Normalized entropy (1/N) \int rho log rho with 0 log 0 = 0, over node masses.
/// d = 0 treats rho as a single-particle density (N = 1). Throws MomentDiverged
/// when the k-th moment changes by more than 1% between the grid and its
/// every-other-node coarsening.
double entropy(const core::ScalarField& rho, double k = 4.0, int d = 0);

struct EntropyDecomposition {
  double direct = 0.0;      // \hat H(rho)
  double decomposed = 0.0;  // \hat H(rho | H_k) + \int rho log H_k
  double residual = 0.0;    // |direct - decomposed|
};

/// Splits \hat H against the reference H_k = prod_i C_k exp(-|r_i|^k), with the
/// relative part taken against H_k renormalized on the grid. The residual is
/// small exactly when the grid captures the reference.
EntropyDecomposition entropy_decomposition(const core::ScalarField& rho, double k = 4.0, int d = 0);

/// Unnormalized entropy \int rho log rho.
double raw_entropy(const core::ScalarField& rho);

/// (1/N) \int rho log(rho / ref); throws AbsoluteContinuity.
double relative_entropy(const core::ScalarField& rho, const core::ScalarField& ref, int d = 0);

/// \int |grad rho|^2 / rho (normalized by N when d > 0), or with a reference
/// (1/N) \int |grad log(rho / ref)|^2 rho.
double fisher_information(const core::ScalarField& rho, const core::ScalarField* ref = nullptr, int d = 0,
                          const core::FloorOptions& floor = {});

/// (1/2) \int |rho - ref|
double total_variation(const core::ScalarField& rho, const core::ScalarField& ref);

struct SampledDistance {
  double value = 0.0;
  double std_error = 0.0;  // bootstrap
  std::size_t samples = 0;
};

/// Normalized W_order between two grid densities from `samples` draws of each.
/// Both use the same streams, so identical inputs give exactly 0. The error is
/// the spread over `resamples` bootstrap replicates that pick the same rows
/// from both sets.
SampledDistance sampled_wasserstein(const core::ScalarField& a, const core::ScalarField& b, int d, int order,
                                    std::size_t samples, std::uint64_t seed, int resamples = 32,
                                    const Metric& metric = {});

struct HwiReport {
  double h = 0.0;                       // normalized relative entropy
  double w2 = 0.0;                      // normalized W_2
  double w2_std_error = 0.0;
  double i_rel = 0.0;                   // normalized relative Fisher information
  double i_joint = 0.0;                 // normalized I(rho_N)
  double i_ref = 0.0;                   // normalized I(rho^{(x)N})
  double entropy_gap = 0.0;             // |H(rho_N) - H(rho^{(x)N})|, normalized
  double hwi_slack = 0.0;               // W_2 sqrt(I_rel) - H
  double entropy_distance_slack = 0.0;  // W_2 (sqrt I + sqrt I_ref) - |gap|
  bool convex_trap = false;
};

struct HwiOptions {
  std::size_t samples = 384;
  int resamples = 32;
  std::uint64_t seed = 0;
  bool convex_trap = true;
};

HwiReport hwi_report(const core::ScalarField& rho_n, const core::ScalarField& ref_product, int n_particles,
                     const HwiOptions& options = {});

struct TestFunction {
  std::string name;
  std::function<double(std::span<const double>)> f;
};

/// Bounded test functions on R^d: Gaussian bumps, a sigmoid, a clamp, a constant.
std::vector<TestFunction> default_test_functions(int d);

/// E[(<mu^N - G, phi>)^2] for each phi over the configurations in `positions`
/// (each row an N*d configuration).
std::vector<diffusion::Estimate> empirical_concentration(const core::SampleSet& positions, int n_particles,
                                                         const core::ScalarField& g,
                                                         const std::vector<TestFunction>& phis);

struct SweepConfig {
  std::vector<int> n_values{2, 3, 4};
  int d = 1;
  std::string trap = "harmonic";
  double pair_amplitude = 2.0;  // w = amplitude * gaussian(width); v_N = w / N
  double pair_width = 0.5;
  bool interacting = true;
  double grid_L = 5.0;
  int grid_n = 37;
  double tol = 1e-12;
  // r_N = r0 N^{-(1 + 2)} in 1D. Collisions on a line are crossings, so the
  // ball only shrinks the hit probability once r_N is well below sqrt(dt).
  diffusion::RadiusLaw radius_law{0.02, 1.0, 2.0, 0.0, std::nullopt};
  diffusion::SimParams sim{0.01, 1.0, 10000, 1};
  double survival_t = 1.0;
  std::size_t w2_samples = 384;
  int bootstrap = 32;
  Metric metric{};
  std::uint64_t seed = 1;
};

struct ChaosRow {
  int n = 0;
  double w1_marg1 = 0.0;
  double w1_marg2 = 0.0;
  double w1_marg2_std_error = 0.0;
  double entropy_hn = 0.0;
  double entropy_ref = 0.0;
  double relative_entropy = 0.0;
  double fisher = 0.0;
  double relative_fisher = 0.0;
  double tv_marg1 = 0.0;
  double hwi_slack = 0.0;
  double survival_at_t = 0.0;
  double per_particle_path_entropy = 0.0;

  double stopped_path_entropy = 0.0;  // per particle, sum cut at min(tau, t)
  double energy = 0.0;
  double w2 = 0.0;
  double w2_std_error = 0.0;
  double entropy_gap = 0.0;
  double entropy_distance_slack = 0.0;
  double survival_std_error = 0.0;
  double path_entropy_std_error = 0.0;
  double marginal_entropy = 0.0;       // H of the 1-marginal
  double chain_rule_gap = 0.0;         // (1/N) H(joint) - H(marginal), >= 0
  double superadditivity_gap = 0.0;    // \hat H(joint) - \hat H(block1) - \hat H(block2), >= 0
  double csiszar_kullback_slack = 0.0; // sqrt(KL/2) - TV on the 1-marginal, >= 0
  bool w1_w2_holds = false;
  double radius = 0.0;
  std::vector<diffusion::Estimate> concentration;
  bool failed = false;
  std::string error;
};

struct ChaosReport {
  std::vector<ChaosRow> rows;
  std::vector<std::string> test_function_names;
  double log_concavity_defect = 0.0;  // of rho_GP; <= 0 means log-concave on the grid
  std::string label;
};

ChaosReport chaos_sweep(const SweepConfig& config);

}  // namespace gpchaos::chaos
