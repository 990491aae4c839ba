#include "gpchaos/nbody/nbody.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gpchaos/core/parallel.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::nbody {
namespace {

using Vec = std::vector<double>;

void validate(const NBodyProblem& p) {
  require(p.n_particles >= 1, ErrorKind::kInvalidArgument, "N must be at least 1", "N");
  require(p.d >= 1 && p.d <= 3, ErrorKind::kInvalidArgument, "d must be 1, 2 or 3", "d");
  require(p.n_particles * p.d <= p.joint_dim_cap, ErrorKind::kCapExceeded,
          "N*d = " + std::to_string(p.n_particles * p.d) + " exceeds the joint dimension cap " +
              std::to_string(p.joint_dim_cap),
          "N");
  require(p.grid.dim() == p.n_particles * p.d, ErrorKind::kDimensionMismatch,
          "joint grid dimension must equal N*d", "grid");
  require(static_cast<bool>(p.trap.potential), ErrorKind::kInvalidArgument, "N-body problem needs a trap",
          "trap");
}

double block_distance(std::span<const double> x, int i, int j, int d) {
  double s = 0.0;
  for (int c = 0; c < d; ++c) {
    const double t = x[static_cast<std::size_t>(i * d + c)] - x[static_cast<std::size_t>(j * d + c)];
    s += t * t;
  }
  return std::sqrt(s);
}

double dot(const core::Grid& g, const Vec& a, const Vec& b) { return core::node_inner_product(g, a, b); }

void axpy(double alpha, const Vec& x, Vec& y) {
  core::parallel_for(y.size(), [&](std::size_t i) { y[i] += alpha * x[i]; });
}

void scale(double alpha, Vec& x) {
  core::parallel_for(x.size(), [&](std::size_t i) { x[i] *= alpha; });
}

class Hamiltonian {
 public:
  explicit Hamiltonian(const NBodyProblem& p) : grid_(p.grid), potential_(joint_potential(p)) {}

  void apply(const Vec& in, Vec& out) const {
    core::apply_negative_laplacian(grid_, in, out);
    core::parallel_for(grid_.size(), [&](std::size_t i) {
      if (!grid_.on_boundary(i)) out[i] += potential_[i] * in[i];
    });
  }

  const Vec& potential() const { return potential_; }
  const core::Grid& grid() const { return grid_; }

  double norm_bound() const {
    return grid_.dim() * core::negative_laplacian_axis_bound(grid_) +
           *std::max_element(potential_.begin(), potential_.end());
  }

  // Diagonal of the stencil operator at interior nodes.
  double diagonal(std::size_t i) const {
    return grid_.dim() * 2.5 / (grid_.spacing() * grid_.spacing()) + potential_[i];
  }

 private:
  core::Grid grid_;
  Vec potential_;
};

Vec product_start(const NBodyProblem& p) {
  const core::Grid& g = p.grid;
  const double omega = std::sqrt(p.trap.harmonic_hint);
  Vec x(g.size());
  Vec pt(static_cast<std::size_t>(g.dim()));
  core::parallel_for(g.size(), [&](std::size_t i) {
    if (g.on_boundary(i)) {
      x[i] = 0.0;
      return;
    }
    double r2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double c = g.coordinate(g.index_along(i, a));
      r2 += c * c;
    }
    x[i] = std::exp(-0.5 * omega * r2);
  });
  scale(1.0 / std::sqrt(dot(g, x, x)), x);
  return x;
}

struct Progress {
  double energy;
  double residual;
};

Progress measure(const Hamiltonian& h, const Vec& x, Vec& hx) {
  const core::Grid& g = h.grid();
  h.apply(x, hx);
  const double e = dot(g, x, hx);
  const double cell = g.cell_volume();
  const double r2 = cell * core::deterministic_sum(g.size(), [&](std::size_t i) {
    const double r = hx[i] - e * x[i];
    return r * r;
  });
  return {e, std::sqrt(r2)};
}

int solve_locally_optimal(const Hamiltonian& h, const GroundStateOptions& opt, Vec& x, Progress& last) {
  const core::Grid& g = h.grid();
  const std::size_t m = g.size();
  Vec hx(m), w(m), hw(m), p, hp;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iter; ++it) {
    last = measure(h, x, hx);
    if (std::abs(last.energy - previous) < opt.tol && last.residual < opt.residual_tol) return it;
    if (it == opt.max_iter) break;
    previous = last.energy;

    const double e = last.energy;
    core::parallel_for(m, [&](std::size_t i) {
      if (g.on_boundary(i)) {
        w[i] = 0.0;
        return;
      }
      const double r = hx[i] - e * x[i];
      w[i] = opt.precondition ? r / h.diagonal(i) : r;
    });

    bool have_p = !p.empty();
    if (have_p) {
      const double c = dot(g, x, p);
      axpy(-c, x, p);
      axpy(-c, hx, hp);
      const double np = std::sqrt(dot(g, p, p));
      if (np < 1e-14) {
        have_p = false;
      } else {
        scale(1.0 / np, p);
        scale(1.0 / np, hp);
      }
    }
    for (int pass = 0; pass < 2; ++pass) {
      axpy(-dot(g, x, w), x, w);
      if (have_p) axpy(-dot(g, p, w), p, w);
    }
    const double nw = std::sqrt(dot(g, w, w));
    if (!(nw > 0.0)) return it;
    scale(1.0 / nw, w);
    h.apply(w, hw);

    const int k = have_p ? 3 : 2;
    const Vec* basis[3] = {&x, &w, have_p ? &p : nullptr};
    const Vec* images[3] = {&hx, &hw, have_p ? &hp : nullptr};
    Eigen::MatrixXd a(k, k);
    for (int r = 0; r < k; ++r) {
      for (int c = r; c < k; ++c) {
        const double v = 0.5 * (dot(g, *basis[r], *images[c]) + dot(g, *basis[c], *images[r]));
        a(r, c) = v;
        a(c, r) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    Eigen::VectorXd c = eig.eigenvectors().col(0);
    if (c(0) < 0.0) c = -c;

    Vec new_p(m), new_hp(m);
    core::parallel_for(m, [&](std::size_t i) {
      double v = c(1) * w[i];
      double hv = c(1) * hw[i];
      if (have_p) {
        v += c(2) * p[i];
        hv += c(2) * hp[i];
      }
      new_p[i] = v;
      new_hp[i] = hv;
    });
    core::parallel_for(m, [&](std::size_t i) { x[i] = c(0) * x[i] + new_p[i]; });
    scale(1.0 / std::sqrt(dot(g, x, x)), x);
    p = std::move(new_p);
    hp = std::move(new_hp);
  }
  throw NoConvergence("N-body ground state did not converge", opt.max_iter, last.residual);
}

int solve_imaginary_time(const Hamiltonian& h, const GroundStateOptions& opt, Vec& x, Progress& last) {
  const core::Grid& g = h.grid();
  const double step = opt.step > 0.0 ? opt.step : 0.9 / h.norm_bound();
  Vec hx(g.size());
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iter; ++it) {
    last = measure(h, x, hx);
    if (std::abs(last.energy - previous) < opt.tol && last.residual < opt.residual_tol) return it;
    if (it == opt.max_iter) break;
    previous = last.energy;
    axpy(-step, hx, x);
    scale(1.0 / std::sqrt(dot(g, x, x)), x);
  }
  throw NoConvergence("N-body imaginary-time propagation did not converge", opt.max_iter, last.residual);
}

Vec symmetrized(const core::Grid& g, const Vec& x, int n_particles, int d) {
  std::vector<int> perm(static_cast<std::size_t>(n_particles));
  std::iota(perm.begin(), perm.end(), 0);
  const core::ScalarField field(g, x);
  Vec acc(g.size(), 0.0);
  int count = 0;
  do {
    const core::ScalarField moved = core::permute_particles(field, perm, d);
    const auto v = moved.values();
    core::parallel_for(g.size(), [&](std::size_t i) { acc[i] += v[i]; });
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  scale(1.0 / count, acc);
  return acc;
}

}  // namespace

NBodyProblem NBodyProblem::make(int n_particles, int d, gp::Trap trap,
                                std::optional<scattering::PairPotential> pair, double half_width,
                                int points_per_axis, int joint_dim_cap) {
  require(n_particles >= 1 && d >= 1, ErrorKind::kInvalidArgument, "N and d must be positive", "N");
  require(n_particles * d <= joint_dim_cap, ErrorKind::kCapExceeded,
          "N*d = " + std::to_string(n_particles * d) + " exceeds the joint dimension cap " +
              std::to_string(joint_dim_cap),
          "N");
  return NBodyProblem{n_particles,
                      d,
                      std::move(trap),
                      std::move(pair),
                      core::Grid(n_particles * d, half_width, points_per_axis),
                      joint_dim_cap,
                      "none"};
}

core::VectorField NBodyGroundState::drift(const core::FloorOptions& floor) const {
  return core::grad_log_density(rho, floor);
}

std::vector<double> joint_potential(const NBodyProblem& p) {
  validate(p);
  const core::Grid& g = p.grid;
  const int n = p.n_particles, d = p.d;
  Vec u(g.size());
  core::parallel_for(g.size(), [&](std::size_t i) {
    double x[core::kMaxDim];
    const std::span<double> pt(x, static_cast<std::size_t>(g.dim()));
    g.point(i, pt);
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += p.trap(pt.subspan(static_cast<std::size_t>(a * d), static_cast<std::size_t>(d)));
    if (p.pair) {
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) s += (*p.pair)(block_distance(pt, a, b, d));
    }
    u[i] = s;
  });
  return u;
}

double rayleigh_quotient(const NBodyProblem& problem, const core::ScalarField& psi) {
  require(psi.grid() == problem.grid, ErrorKind::kDimensionMismatch, "psi is not on the problem grid");
  const Hamiltonian h(problem);
  Vec x(psi.values().begin(), psi.values().end());
  Vec hx(x.size());
  h.apply(x, hx);
  return dot(problem.grid, x, hx) / dot(problem.grid, x, x);
}

NBodyGroundState ground_state(const NBodyProblem& problem, const GroundStateOptions& options) {
  validate(problem);
  require(options.tol > 0.0, ErrorKind::kInvalidArgument, "tol must be positive", "tol");
  require(options.residual_tol > 0.0, ErrorKind::kInvalidArgument, "residual_tol must be positive",
          "residual_tol");
  const Hamiltonian h(problem);
  const core::Grid& g = problem.grid;
  Vec x = product_start(problem);
  Progress last{};
  const int iterations = options.solver == Solver::kLocallyOptimal ? solve_locally_optimal(h, options, x, last)
                                                                   : solve_imaginary_time(h, options, x, last);

  if (options.symmetrize && problem.n_particles > 1) x = symmetrized(g, x, problem.n_particles, problem.d);
  // The ground state is positive; flip a global sign and drop round-off negatives.
  const double total = core::deterministic_sum(g.size(), [&](std::size_t i) { return x[i]; });
  for (double& v : x) v = std::abs(total < 0.0 ? -v : v);
  scale(1.0 / std::sqrt(dot(g, x, x)), x);
  Vec hx(g.size());
  last = measure(h, x, hx);

  Vec rho(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rho[i] = x[i] * x[i];
  core::ScalarField psi(g, std::move(x));
  core::ScalarField density = core::ScalarField(g, std::move(rho)).normalized();
  return NBodyGroundState{problem.n_particles, problem.d, std::move(psi), std::move(density),
                          last.energy,        last.residual, iterations};
}

EnergyComponents energy_components(const NBodyGroundState& state, const NBodyProblem& problem) {
  validate(problem);
  const core::Grid& g = problem.grid;
  require(state.psi.grid() == g, ErrorKind::kDimensionMismatch, "state is not on the problem grid");
  const int n = problem.n_particles, d = problem.d;
  const auto psi = state.psi.values();
  Vec lap(g.size());
  core::apply_negative_laplacian(g, psi, lap, 0, d);
  const double cell = g.cell_volume();
  const double norm2 = dot(g, Vec(psi.begin(), psi.end()), Vec(psi.begin(), psi.end()));

  EnergyComponents out;
  out.kinetic = cell * core::deterministic_sum(g.size(), [&](std::size_t i) { return psi[i] * lap[i]; }) / norm2;
  const auto weighted = [&](auto&& f) {
    return cell * core::deterministic_sum(g.size(), [&](std::size_t i) {
             if (psi[i] == 0.0) return 0.0;
             double x[core::kMaxDim];
             const std::span<double> pt(x, static_cast<std::size_t>(g.dim()));
             g.point(i, pt);
             return f(std::span<const double>(pt)) * psi[i] * psi[i];
           }) /
           norm2;
  };
  out.trap = weighted([&](std::span<const double> pt) { return problem.trap(pt.subspan(0, static_cast<std::size_t>(d))); });
  if (problem.pair && n > 1) {
    out.interaction = weighted([&](std::span<const double> pt) {
      double s = 0.0;
      for (int j = 1; j < n; ++j) s += (*problem.pair)(block_distance(pt, 0, j, d));
      return 0.5 * s;
    });
  }
  return out;
}

double localized_drift_distance(const NBodyGroundState& state, const gp::GpSolution& gp_sol, double radius,
                                const core::FloorOptions& floor) {
  const core::Grid& g = state.rho.grid();
  const int n = state.n_particles, d = state.d;
  const core::Grid& pg = gp_sol.phi.grid();
  require(pg.dim() == d && pg.points_per_axis() == g.points_per_axis() && pg.half_width() == g.half_width(),
          ErrorKind::kDimensionMismatch, "GP solution grid does not match the one-particle grid", "grid");
  require(radius >= 0.0, ErrorKind::kInvalidArgument, "radius must be nonnegative", "radius");

  const core::VectorField b = state.drift(floor);
  const core::VectorField u = gp::gp_drift(gp_sol, floor);
  std::size_t tail = 1;
  for (int a = d; a < g.dim(); ++a) tail *= static_cast<std::size_t>(g.points_per_axis());

  return core::deterministic_sum(g.size(), [&](std::size_t i) {
    const double r = state.rho[i];
    if (r == 0.0) return 0.0;
    if (radius > 0.0) {
      double x[core::kMaxDim];
      const std::span<double> pt(x, static_cast<std::size_t>(g.dim()));
      g.point(i, pt);
      for (int j = 1; j < n; ++j)
        if (block_distance(pt, 0, j, d) < radius) return 0.0;
    }
    const std::size_t one = i / tail;
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = b.at(i, c) - u.at(one, c);
      s += diff * diff;
    }
    return s * r * g.weight(i);
  });
}

double exclusion_radius(int n_particles, double delta) {
  require(n_particles >= 1, ErrorKind::kInvalidArgument, "N must be positive", "N");
  return std::pow(static_cast<double>(n_particles), -1.0 / 3.0 - delta);
}

}  // namespace gpchaos::nbody
