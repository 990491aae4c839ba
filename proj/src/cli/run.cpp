#include "gpchaos/cli/run.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gpchaos/core/derivatives.hpp"
#include "gpchaos/core/field_io.hpp"
#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/diffusion/diffusion.hpp"
#include "gpchaos/gp/gp.hpp"
#include "gpchaos/nbody/nbody.hpp"
#include "gpchaos/scattering/scattering.hpp"

namespace gpchaos::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Outputs {
  const ExperimentConfig& config;
  std::string hash;
  std::vector<std::string> written;

  std::string path(const std::string& suffix) const {
    return (fs::path(config.output_dir) / (config.command + "_" + hash + suffix)).string();
  }
  std::string comment() const {
    return "# gpchaos " + std::string(kArtifactVersion) + " config_hash=" + hash + "\n";
  }
  void text(const std::string& suffix, const std::string& content) {
    const auto p = path(suffix);
    write_atomic(p, content);
    written.push_back(p);
  }
  void csv(const std::string& suffix, const std::string& body) { text(suffix, comment() + body); }
  void field(const std::string& suffix, const core::ScalarField& f) {
    // Core binary layout followed by a provenance trailer line.
    std::ostringstream os(std::ios::binary);
    core::write_binary(f, os);
    os << "\ngpchaos-provenance " << provenance(config).dump() << "\n";
    text(suffix, os.str());
  }
};

scattering::PairPotential parse_pair(const std::string& spec, const std::string& field) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(item, &used));
        require(used == item.size(), ErrorKind::kValidation, "bad number '" + item + "' in pair", field);
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::kValidation, "bad number '" + item + "' in pair", field);
      }
    }
  }
  require(args.size() == 2, ErrorKind::kValidation, "pair needs two parameters, e.g. gaussian:1.0,0.5", field);
  if (kind == "gaussian") return scattering::PairPotential::gaussian(args[0], args[1]);
  if (kind == "square_well") return scattering::PairPotential::square_well(args[0], args[1]);
  throw Error(ErrorKind::kValidation, "unknown pair kind '" + kind + "'", field);
}

json run_scatter(const ExperimentConfig& c, Outputs& out) {
  const auto& p = c.scatter;
  const auto v = p.potential == "square_well" ? scattering::PairPotential::square_well(p.depth, p.radius)
                                              : scattering::PairPotential::gaussian(p.amplitude, p.width);
  const auto sol = scattering::solve_zero_energy(v, p.r_max, p.steps);
  json s = {{"a", sol.scattering_length},
            {"s_hat", scattering::s_hat(sol)},
            {"fit_residual", sol.fit_residual},
            {"support_radius", sol.support_radius}};
  if (p.potential == "square_well" && p.depth > 0.0) {
    const double k = std::sqrt(0.5 * p.depth);
    s["a_closed_form"] = p.radius - std::tanh(k * p.radius) / k;
  }
  if (!p.gp_n_values.empty()) {
    const auto v1 = scattering::with_unit_scattering_length(v);
    json rows = json::array();
    for (int n : p.gp_n_values) {
      const auto vn = scattering::gp_scaled_potential(v1, n, p.g);
      const auto sn = scattering::solve_zero_energy(vn, 8.0 * vn.range(), p.steps);
      const double target = scattering::gp_scattering_length(n, p.g);
      rows.push_back({{"N", n},
                      {"a_target", target},
                      {"a", sn.scattering_length},
                      {"relative_error", std::abs(sn.scattering_length / target - 1.0)}});
    }
    s["gp_scaling"] = rows;
  }
  std::string csv = "r,u,du\n";
  for (std::size_t k = 0; k < sol.radius.size(); ++k) {
    csv += num(sol.radius[k]) + "," + num(sol.u[k]) + "," + num(sol.du[k]) + "\n";
  }
  out.csv(".csv", csv);
  return s;
}

json energy_json(const gp::EnergyBreakdown& e) {
  return {{"kinetic", e.kinetic}, {"trap", e.trap}, {"interaction", e.interaction}, {"total", e.total}};
}

json run_gp(const ExperimentConfig& c, Outputs& out) {
  const auto& p = c.gp;
  gp::GpProblem problem{gp::Trap::from_name(p.trap), p.g, p.dim,
                        core::Grid(p.dim, p.grid_L, p.grid_n, c.max_grid_points), std::nullopt};
  if (p.kernel_amplitude > 0.0) problem.kernel = scattering::PairPotential::gaussian(p.kernel_amplitude, p.kernel_width);
  gp::GpOptions opts;
  opts.tol = p.tol;
  opts.max_iter = p.max_iter;
  const auto sol = gp::minimize_gp(problem, opts);
  std::vector<double> phi4(sol.phi.size());
  for (std::size_t i = 0; i < phi4.size(); ++i) phi4[i] = std::pow(sol.phi[i], 4);
  const double quartic = core::node_inner_product(problem.grid, phi4, std::vector<double>(phi4.size(), 1.0));
  json s = {{"lambda", sol.lambda},
            {"energy", energy_json(sol.energy)},
            {"residual", sol.residual},
            {"iterations", sol.iterations},
            {"phi4_integral", quartic},
            {"lambda_minus_energy", sol.lambda - sol.energy.total}};
  std::string csv = "quantity,value\n";
  csv += "lambda," + num(sol.lambda) + "\n";
  csv += "kinetic," + num(sol.energy.kinetic) + "\n";
  csv += "trap," + num(sol.energy.trap) + "\n";
  csv += "interaction," + num(sol.energy.interaction) + "\n";
  csv += "total," + num(sol.energy.total) + "\n";
  csv += "residual," + num(sol.residual) + "\n";
  csv += "iterations," + std::to_string(sol.iterations) + "\n";
  out.csv(".csv", csv);
  if (p.dump) {
    out.field("_phi.bin", sol.phi);
    out.field("_rho.bin", sol.density());
  }
  return s;
}

json run_nbody(const ExperimentConfig& c, Outputs& out) {
  const auto& p = c.nbody;
  std::optional<scattering::PairPotential> pair;
  std::string label = p.scaling;
  if (p.pair != "none") {
    const auto v = parse_pair(p.pair, "nbody.pair");
    if (p.scaling == "meanfield") {
      const int n = p.n;
      pair = scattering::PairPotential([v, n](double r) { return v(r) / n; }, v.range(),
                                       v.label() + " / N");
      label = p.d == 1 ? "1D mean-field analog" : "mean-field";
    } else if (p.scaling == "gp") {
      pair = scattering::gp_scaled_potential(scattering::with_unit_scattering_length(v), p.n, p.g);
    } else {
      pair = v;
    }
  }
  auto problem =
      nbody::NBodyProblem::make(p.n, p.d, gp::Trap::from_name(p.trap), pair, p.grid_L, p.grid_n, p.joint_dim_cap);
  problem.scaling_label = label;
  nbody::GroundStateOptions opts;
  opts.tol = p.tol;
  opts.residual_tol = p.residual_tol;
  opts.solver = p.solver == "imaginary_time" ? nbody::Solver::kImaginaryTime : nbody::Solver::kLocallyOptimal;
  const auto gs = nbody::ground_state(problem, opts);
  const auto comp = nbody::energy_components(gs, problem);
  json s = {{"E0", gs.energy},
            {"per_particle_energy", gs.per_particle_energy()},
            {"components",
             {{"kinetic", comp.kinetic}, {"trap", comp.trap}, {"interaction", comp.interaction}, {"sum", comp.sum()}}},
            {"residual", gs.residual},
            {"iterations", gs.iterations},
            {"scaling", label}};
  std::string csv = "quantity,value\n";
  csv += "E0," + num(gs.energy) + "\n";
  csv += "per_particle_energy," + num(gs.per_particle_energy()) + "\n";
  csv += "kinetic," + num(comp.kinetic) + "\n";
  csv += "trap," + num(comp.trap) + "\n";
  csv += "interaction," + num(comp.interaction) + "\n";
  csv += "residual," + num(gs.residual) + "\n";
  csv += "iterations," + std::to_string(gs.iterations) + "\n";
  out.csv(".csv", csv);
  if (p.dump) out.field("_rho.bin", gs.rho);
  return s;
}

bool is_builtin_law(const std::string& s) { return s == "ou" || s == "zero"; }

json run_diffuse(const ExperimentConfig& c, Outputs& out) {
  const auto& p = c.diffuse;
  const int dim = p.n * p.d;
  std::optional<diffusion::Drift> b;
  std::optional<diffusion::InitialLaw> initial;
  double half_width = p.half_width;
  if (p.drift_from == "ou") {
    b = diffusion::Drift::ornstein_uhlenbeck(dim, p.kappa);
    initial = diffusion::InitialLaw::gaussian(dim, 0.5 / p.kappa);
  } else if (p.drift_from == "zero") {
    b = diffusion::Drift::zero(dim);
    initial = diffusion::InitialLaw::gaussian(dim, 1.0);
  } else {
    const auto rho = core::read_binary(p.drift_from);
    require(rho.grid().dim() == dim, ErrorKind::kDimensionMismatch,
            "density in " + p.drift_from + " has dimension " + std::to_string(rho.grid().dim()) + ", expected N*d",
            "diffuse.drift_from");
    b = diffusion::Drift::from_field(core::grad_log_density(rho));
    initial = diffusion::InitialLaw::from_density(rho);
    if (half_width == 0.0) half_width = rho.grid().half_width();
  }
  std::optional<diffusion::Drift> u;
  if (p.reference == "ou") {
    u = diffusion::Drift::ornstein_uhlenbeck(dim, p.kappa);
  } else if (p.reference == "zero") {
    u = diffusion::Drift::zero(dim);
  } else {
    const auto rho1 = core::read_binary(p.reference);
    require(rho1.grid().dim() == p.d, ErrorKind::kDimensionMismatch,
            "reference density must be one-particle (dimension d)", "diffuse.reference");
    u = diffusion::Drift::per_particle(diffusion::Drift::from_field(core::grad_log_density(rho1)), p.n);
  }

  const diffusion::SimParams params{p.dt, p.T, p.paths, c.seed};
  diffusion::SimOptions opts;
  if (half_width > 0.0) opts.half_width = half_width;
  const auto ens = diffusion::simulate(*b, *initial, params, opts);

  diffusion::StoppingRecord stop;
  stop.horizon = p.T;
  stop.dt = p.dt;
  stop.tau.assign(static_cast<std::size_t>(p.paths), stop.never());
  if (p.n >= 2) {
    diffusion::RadiusLaw law;
    law.prefactor = p.radius_prefactor;
    law.base_exponent = p.radius_exponent > 0.0 ? p.radius_exponent : 1.0 / p.d;
    law.delta = p.delta;
    stop = diffusion::stopping_times(ens, p.n, p.d, law);
  }
  json survival = json::array();
  for (int k = 0; k < p.survival_points; ++k) {
    const double t = p.T * k / (p.survival_points - 1);
    const auto e = diffusion::survival_probability(stop, t);
    survival.push_back({{"t", t}, {"p", e.value}, {"stderr", e.std_error}});
  }
  const auto pe = diffusion::path_relative_entropy(ens, *b, *u, p.T, p.n);
  json s = {{"survival", survival},
            {"relative_entropy", {{"total", pe.total}, {"per_particle", pe.per_particle}, {"stderr", pe.std_error}}},
            {"radius", stop.radius},
            {"escapes", ens.escapes},
            {"drift_from", is_builtin_law(p.drift_from) ? p.drift_from : "file"},
            {"reference", is_builtin_law(p.reference) ? p.reference : "file"}};
  std::string csv = "path,tau\n";
  for (std::size_t i = 0; i < stop.tau.size(); ++i) csv += std::to_string(i) + "," + num(stop.tau[i]) + "\n";
  out.csv(".csv", csv);
  return s;
}

json run_chaos(const ExperimentConfig& c, Outputs& out) {
  const auto report = chaos::chaos_sweep(sweep_config(c));
  out.csv(".csv", chaos_csv(report, ""));
  if (c.chaos.emit_plot_data) out.csv("_plot.csv", chaos_plot_csv(report, ""));
  return chaos_json(report);
}

struct Column {
  const char* name;
  double chaos::ChaosRow::*field;
};

// Fixed report columns, in order.
constexpr Column kMetricColumns[] = {
    {"W1_marg1", &chaos::ChaosRow::w1_marg1},
    {"W1_marg2", &chaos::ChaosRow::w1_marg2},
    {"entropy_HN", &chaos::ChaosRow::entropy_hn},
    {"entropy_ref", &chaos::ChaosRow::entropy_ref},
    {"relative_entropy", &chaos::ChaosRow::relative_entropy},
    {"fisher", &chaos::ChaosRow::fisher},
    {"relative_fisher", &chaos::ChaosRow::relative_fisher},
    {"TV_marg1", &chaos::ChaosRow::tv_marg1},
    {"hwi_slack", &chaos::ChaosRow::hwi_slack},
    {"survival_at_t", &chaos::ChaosRow::survival_at_t},
    {"per_particle_path_entropy", &chaos::ChaosRow::per_particle_path_entropy},
};

constexpr Column kExtraColumns[] = {
    {"energy_per_particle", &chaos::ChaosRow::energy},
    {"W1_marg2_stderr", &chaos::ChaosRow::w1_marg2_std_error},
    {"W2", &chaos::ChaosRow::w2},
    {"W2_stderr", &chaos::ChaosRow::w2_std_error},
    {"entropy_gap", &chaos::ChaosRow::entropy_gap},
    {"entropy_distance_slack", &chaos::ChaosRow::entropy_distance_slack},
    {"survival_stderr", &chaos::ChaosRow::survival_std_error},
    {"path_entropy_stderr", &chaos::ChaosRow::path_entropy_std_error},
    {"stopped_path_entropy", &chaos::ChaosRow::stopped_path_entropy},
    {"marginal_entropy", &chaos::ChaosRow::marginal_entropy},
    {"chain_rule_gap", &chaos::ChaosRow::chain_rule_gap},
    {"superadditivity_gap", &chaos::ChaosRow::superadditivity_gap},
    {"csiszar_kullback_slack", &chaos::ChaosRow::csiszar_kullback_slack},
    {"radius", &chaos::ChaosRow::radius},
};

}  // namespace

chaos::SweepConfig sweep_config(const ExperimentConfig& c) {
  const auto& p = c.chaos;
  chaos::SweepConfig s;
  s.n_values = p.n_values;
  s.d = p.d;
  s.trap = p.trap;
  s.interacting = p.interacting;
  s.pair_amplitude = p.pair_amplitude;
  s.pair_width = p.pair_width;
  s.grid_L = p.grid_L;
  s.grid_n = p.grid_n;
  s.tol = p.tol;
  s.sim = {p.dt, p.T, p.paths, c.seed};
  s.survival_t = p.survival_t;
  s.radius_law = {p.radius_prefactor, p.radius_exponent, p.radius_delta, 0.0, std::nullopt};
  s.w2_samples = static_cast<std::size_t>(p.w2_samples);
  s.bootstrap = p.bootstrap;
  s.metric = p.metric == "euclidean" ? chaos::Metric::euclidean()
                                     : chaos::Metric{chaos::MetricKind::kTruncatedEuclidean, p.truncation};
  s.seed = c.seed;
  return s;
}

std::string chaos_csv(const chaos::ChaosReport& report, const std::string& header_comment) {
  std::string csv = header_comment + "N";
  for (const auto& col : kMetricColumns) csv += std::string(",") + col.name;
  for (const auto& col : kExtraColumns) csv += std::string(",") + col.name;
  csv += ",w1_w2_holds";
  for (const auto& name : report.test_function_names) csv += ",concentration_" + name + ",concentration_" + name + "_stderr";
  csv += ",status\n";
  for (const auto& row : report.rows) {
    csv += std::to_string(row.n);
    for (const auto& col : kMetricColumns) csv += "," + num(row.*col.field);
    for (const auto& col : kExtraColumns) csv += "," + num(row.*col.field);
    csv += row.w1_w2_holds ? ",1" : ",0";
    for (std::size_t k = 0; k < report.test_function_names.size(); ++k) {
      const bool have = k < row.concentration.size();
      csv += "," + num(have ? row.concentration[k].value : 0.0) + "," + num(have ? row.concentration[k].std_error : 0.0);
    }
    csv += row.failed ? ",failed\n" : ",ok\n";
  }
  return csv;
}

std::string chaos_plot_csv(const chaos::ChaosReport& report, const std::string& header_comment) {
  std::string csv = header_comment + "N,metric,value,stderr\n";
  auto line = [&](int n, const std::string& metric, double v, double se) {
    csv += std::to_string(n) + "," + metric + "," + num(v) + "," + num(se) + "\n";
  };
  for (const auto& row : report.rows) {
    if (row.failed) continue;
    line(row.n, "W1_marg1", row.w1_marg1, 0.0);
    line(row.n, "W1_marg2", row.w1_marg2, row.w1_marg2_std_error);
    line(row.n, "entropy_gap", row.entropy_gap, 0.0);
    line(row.n, "relative_entropy", row.relative_entropy, 0.0);
    line(row.n, "relative_fisher", row.relative_fisher, 0.0);
    line(row.n, "TV_marg1", row.tv_marg1, 0.0);
    line(row.n, "hwi_slack", row.hwi_slack, row.w2_std_error);
    line(row.n, "entropy_distance_slack", row.entropy_distance_slack, row.w2_std_error);
    line(row.n, "survival_at_t", row.survival_at_t, row.survival_std_error);
    line(row.n, "per_particle_path_entropy", row.per_particle_path_entropy, row.path_entropy_std_error);
    for (std::size_t k = 0; k < row.concentration.size(); ++k) {
      line(row.n, "concentration_" + report.test_function_names[k], row.concentration[k].value,
           row.concentration[k].std_error);
    }
  }
  return csv;
}

json chaos_json(const chaos::ChaosReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r = {{"N", row.n}, {"status", row.failed ? "failed" : "ok"}};
    if (row.failed) r["error"] = row.error;
    for (const auto& col : kMetricColumns) r[col.name] = row.*col.field;
    for (const auto& col : kExtraColumns) r[col.name] = row.*col.field;
    r["w1_w2_holds"] = row.w1_w2_holds;
    json conc = json::object();
    for (std::size_t k = 0; k < row.concentration.size(); ++k) {
      conc[report.test_function_names[k]] = {{"value", row.concentration[k].value},
                                             {"stderr", row.concentration[k].std_error}};
    }
    r["concentration"] = conc;
    rows.push_back(r);
  }
  return {{"label", report.label},
          {"rows", rows},
          {"log_concavity_defect", report.log_concavity_defect},
          {"conventions",
           {{"W1", "normalized (1/N) sum of the truncated distance, optimal coupling"},
            {"W2", "square root of the normalized (1/N) mean squared distance"},
            {"entropy", "normalized (1/N) int rho log rho over trapezoid node masses"}}}};
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    require(!ec, ErrorKind::kIo, "cannot create " + target.parent_path().string() + ": " + ec.message(), "output_dir");
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorKind::kIo, "cannot open " + tmp, "output_dir");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    require(static_cast<bool>(f), ErrorKind::kIo, "write failed for " + tmp, "output_dir");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "cannot rename " + tmp + " to " + path + ": " + ec.message(), "output_dir");
  }
}

int exit_status(ErrorKind kind) { return is_validation_error(kind) ? 2 : 3; }

json error_payload(const Error& error) {
  json body = {{"kind", std::string(to_string(error.kind()))},
               {"message", error.what()},
               {"subject", error.subject()},
               {"exit_status", exit_status(error.kind())}};
  if (const auto* nc = dynamic_cast<const NoConvergence*>(&error)) {
    body["iterations"] = nc->iterations();
    body["last_residual"] = nc->last_residual();
  }
  return {{"error", body}};
}

RunResult run(const ExperimentConfig& config) {
  validate(config);
  Outputs out{config, config_hash(config), {}};
  json summary;
  if (config.command == "scatter") summary = run_scatter(config, out);
  if (config.command == "gp") summary = run_gp(config, out);
  if (config.command == "nbody") summary = run_nbody(config, out);
  if (config.command == "diffuse") summary = run_diffuse(config, out);
  if (config.command == "chaos") summary = run_chaos(config, out);
  summary["provenance"] = provenance(config);
  summary["config"] = to_json(config);
  summary["config"].erase("output_dir");
  out.text(".json", summary.dump(2) + "\n");
  return {summary, out.written};
}

}  // namespace gpchaos::cli
