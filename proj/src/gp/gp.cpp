#include "gpchaos/gp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::gp {
namespace {

constexpr std::size_t kMaxKernelNodes = 20000;

// (w * rho)(x_i) = sum_j w(|x_i - x_j|) rho_j weight_j, evaluated directly.
class KernelConvolution {
 public:
  KernelConvolution(const core::Grid& grid, const scattering::PairPotential& w) : grid_(grid) {
    require(grid.size() <= kMaxKernelNodes, ErrorKind::kCapExceeded,
            "kernel interaction is limited to grids of at most 20000 nodes", "grid");
    const int n = grid.points_per_axis();
    const int span = 2 * n - 1;
    std::size_t table_size = 1;
    for (int a = 0; a < grid.dim(); ++a) table_size *= static_cast<std::size_t>(span);
    table_.resize(table_size);
    std::vector<int> off(static_cast<std::size_t>(grid.dim()));
    for (std::size_t t = 0; t < table_size; ++t) {
      std::size_t rest = t;
      double r2 = 0.0;
      for (int a = grid.dim() - 1; a >= 0; --a) {
        const int k = static_cast<int>(rest % static_cast<std::size_t>(span)) - (n - 1);
        rest /= static_cast<std::size_t>(span);
        r2 += (k * grid.spacing()) * (k * grid.spacing());
      }
      table_[t] = w(std::sqrt(r2));
    }
  }

  void apply(std::span<const double> rho, std::span<double> out) const {
    const int n = grid_.points_per_axis();
    const int dim = grid_.dim();
    const auto span = static_cast<std::size_t>(2 * n - 1);
    core::parallel_for(grid_.size(), [&](std::size_t i) {
      int ii[core::kMaxDim];
      int jj[core::kMaxDim];
      grid_.unravel(i, std::span<int>(ii, static_cast<std::size_t>(dim)));
      double s = 0.0;
      for (std::size_t j = 0; j < grid_.size(); ++j) {
        if (rho[j] == 0.0) continue;
        grid_.unravel(j, std::span<int>(jj, static_cast<std::size_t>(dim)));
        std::size_t t = 0;
        for (int a = 0; a < dim; ++a) t = t * span + static_cast<std::size_t>(jj[a] - ii[a] + (n - 1));
        s += table_[t] * rho[j] * grid_.weight(j);
      }
      out[i] = s;
    });
  }

 private:
  core::Grid grid_;
  std::vector<double> table_;
};

struct Operator {
  const GpProblem& problem;
  std::vector<double> trap;  // V at the nodes
  std::optional<KernelConvolution> kernel;

  explicit Operator(const GpProblem& p) : problem(p) {
    const core::Grid& g = p.grid;
    trap.resize(g.size());
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.point(i, x);
      trap[i] = p.trap(x);
    }
    if (p.kernel) kernel.emplace(g, *p.kernel);
  }

  struct Parts {
    std::vector<double> h_phi;   // full GP operator applied to phi
    double kinetic = 0.0;
    double trap = 0.0;
    double quartic = 0.0;        // \int phi^4
    double kernel_pair = 0.0;    // \int (w*rho) rho
  };

  Parts apply(std::span<const double> phi) const {
    const core::Grid& g = problem.grid;
    Parts parts;
    parts.h_phi.assign(g.size(), 0.0);
    core::apply_negative_laplacian(g, phi, parts.h_phi);
    const double cell = g.cell_volume();
    parts.kinetic = cell * core::deterministic_sum(g.size(), [&](std::size_t i) { return phi[i] * parts.h_phi[i]; });
    std::vector<double> mean_field;
    if (kernel) {
      std::vector<double> rho(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) rho[i] = phi[i] * phi[i];
      mean_field.assign(g.size(), 0.0);
      kernel->apply(rho, mean_field);
    }
    parts.trap = cell * core::deterministic_sum(g.size(), [&](std::size_t i) { return trap[i] * phi[i] * phi[i]; });
    parts.quartic = cell * core::deterministic_sum(g.size(), [&](std::size_t i) {
      const double p2 = phi[i] * phi[i];
      return p2 * p2;
    });
    if (kernel) {
      parts.kernel_pair = cell * core::deterministic_sum(g.size(), [&](std::size_t i) {
        return mean_field[i] * phi[i] * phi[i];
      });
    }
    const double g2 = 2.0 * problem.g;
    core::parallel_for(g.size(), [&](std::size_t i) {
      if (g.on_boundary(i)) {
        parts.h_phi[i] = 0.0;
        return;
      }
      double local = trap[i] + g2 * phi[i] * phi[i];
      if (kernel) local += mean_field[i];
      parts.h_phi[i] += local * phi[i];
    });
    return parts;
  }

  EnergyBreakdown energy(const Parts& parts) const {
    EnergyBreakdown e;
    e.kinetic = parts.kinetic;
    e.trap = parts.trap;
    e.interaction = problem.g * parts.quartic + 0.5 * parts.kernel_pair;
    e.total = e.kinetic + e.trap + e.interaction;
    return e;
  }
};

void validate(const GpProblem& p) {
  require(p.d >= 1 && p.d <= 3, ErrorKind::kInvalidArgument, "GP dimension must be 1, 2 or 3", "dim");
  require(p.grid.dim() == p.d, ErrorKind::kDimensionMismatch, "grid dimension must equal d", "dim");
  require(p.g >= 0.0 && std::isfinite(p.g), ErrorKind::kInvalidArgument, "g must be nonnegative", "g");
  require(static_cast<bool>(p.trap.potential), ErrorKind::kInvalidArgument, "GP problem needs a trap", "trap");
}

std::vector<double> initial_state(const GpProblem& p, GpStart start) {
  const core::Grid& g = p.grid;
  std::vector<double> phi(g.size());
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  // Harmonic trap omega^2 |x|^2 has ground state exp(-omega |x|^2 / 2).
  const double omega = std::sqrt(p.trap.harmonic_hint);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.on_boundary(i)) {
      phi[i] = 0.0;
      continue;
    }
    if (start == GpStart::kUniform) {
      phi[i] = 1.0;
      continue;
    }
    g.point(i, x);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    phi[i] = std::exp(-0.5 * omega * r2);
  }
  const double norm = std::sqrt(core::node_inner_product(g, phi, phi));
  for (double& v : phi) v /= norm;
  return phi;
}

}  // namespace

Trap Trap::harmonic() {
  return Trap{[](std::span<const double> x) {
                double r2 = 0.0;
                for (double v : x) r2 += v * v;
                return r2;
              },
              "harmonic", 1.0};
}

Trap Trap::quartic() {
  return Trap{[](std::span<const double> x) {
                double r2 = 0.0;
                for (double v : x) r2 += v * v;
                return r2 * r2;
              },
              "quartic", 1.0};
}

Trap Trap::from_name(const std::string& name) {
  if (name == "harmonic") return harmonic();
  if (name == "quartic") return quartic();
  throw Error(ErrorKind::kValidation, "unknown trap '" + name + "'", "trap");
}

core::ScalarField GpSolution::density() const {
  std::vector<double> rho(phi.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = phi[i] * phi[i];
  return core::ScalarField(phi.grid(), std::move(rho)).normalized();
}

EnergyBreakdown gp_energy(const core::ScalarField& phi, const GpProblem& problem) {
  validate(problem);
  require(phi.grid() == problem.grid, ErrorKind::kDimensionMismatch, "phi is not on the problem grid");
  std::vector<double> sq(phi.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = phi[i] * phi[i];
  const double norm = core::integrate_nodes(problem.grid, sq);
  require(std::abs(norm - 1.0) <= 1e-8, ErrorKind::kNotNormalized,
          "phi has squared norm " + std::to_string(norm));
  Operator op(problem);
  return op.energy(op.apply(phi.values()));
}

GpSolution minimize_gp(const GpProblem& problem, const GpOptions& options) {
  validate(problem);
  require(options.step >= 0.0, ErrorKind::kInvalidArgument, "step must be positive", "step");
  require(options.tol > 0.0, ErrorKind::kInvalidArgument, "tol must be positive", "tol");
  const core::Grid& g = problem.grid;
  Operator op(problem);

  std::vector<double> phi = initial_state(problem, options.start);
  double step = options.step;
  if (step == 0.0) {
    double max_phi2 = 0.0;
    for (double v : phi) max_phi2 = std::max(max_phi2, v * v);
    double bound = g.dim() * core::negative_laplacian_axis_bound(g) +
                   *std::max_element(op.trap.begin(), op.trap.end()) + 6.0 * problem.g * max_phi2;
    if (problem.kernel) bound += (*problem.kernel)(0.0);
    step = 0.9 / bound;
  }

  const double cell = g.cell_volume();
  double previous_energy = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= options.max_iter; ++it) {
    Operator::Parts parts = op.apply(phi);
    const EnergyBreakdown energy = op.energy(parts);
    if (energy.total > previous_energy + options.monotonicity_slack * std::abs(previous_energy)) {
      throw Error(ErrorKind::kNonMonotone,
                  "GP energy increased along the gradient flow; step " + std::to_string(step) + " is too large",
                  "energy_monotone");
    }
    previous_energy = energy.total;
    const double lambda = cell * core::deterministic_sum(g.size(), [&](std::size_t i) { return phi[i] * parts.h_phi[i]; });
    residual = std::sqrt(cell * core::deterministic_sum(g.size(), [&](std::size_t i) {
      const double r = parts.h_phi[i] - lambda * phi[i];
      return r * r;
    }));
    if (residual < options.tol) {
      GpSolution sol{core::ScalarField(g, phi), lambda, energy, residual, it};
      return sol;
    }
    if (it == options.max_iter) break;
    core::parallel_for(g.size(), [&](std::size_t i) { phi[i] -= step * parts.h_phi[i]; });
    const double norm = std::sqrt(core::node_inner_product(g, phi, phi));
    for (double& v : phi) v /= norm;
  }
  throw NoConvergence("GP gradient flow did not reach residual " + std::to_string(options.tol), options.max_iter,
                      residual);
}

core::VectorField gp_drift(const GpSolution& sol, const core::FloorOptions& floor) {
  return core::grad_log_density(sol.density(), floor);
}

}  // namespace gpchaos::gp
