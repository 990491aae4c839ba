#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gpchaos/cli/config.hpp"
#include "gpchaos/cli/run.hpp"
#include "gpchaos/core/parallel.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace gpchaos;

// Values given on the command line, keyed like the config file.
struct Overrides {
  json top = json::object();
  json section = json::object();
};

template <typename T>
void flag(CLI::App* app, Overrides& o, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<T>(name, [&o, key](const T& v) { o.section[key] = v; }, help);
}

void common(CLI::App* app, Overrides& o, std::string& config_path) {
  app->add_option("--config", config_path, "JSON experiment config");
  app->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& v) { o.top["seed"] = v; }, "RNG seed");
  app->add_option_function<std::string>("--output-dir", [&o](const std::string& v) { o.top["output_dir"] = v; },
                                        "directory for artifacts");
  app->add_option_function<std::uint64_t>(
      "--max-grid-points", [&o](const std::uint64_t& v) { o.top["max_grid_points"] = v; }, "cap on grid nodes");
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config file " + path, "config");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kValidation, std::string("config is not valid JSON: ") + e.what(), "config");
  }
}

int fail(const Error& e) {
  std::cerr << cli::error_payload(e).dump() << std::endl;
  return cli::exit_status(e.kind());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gross-Pitaevskii ground states, N-body diffusions and propagation of chaos"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "print artifact and spec version");

  std::string config_path;
  Overrides o;

  auto* scatter = app.add_subcommand("scatter", "zero-energy scattering solution of a pair potential");
  common(scatter, o, config_path);
  flag<std::string>(scatter, o, "--potential", "potential", "square_well | gaussian");
  flag<double>(scatter, o, "--well-depth", "depth", "square well height");
  flag<double>(scatter, o, "--well-radius", "radius", "square well radius");
  flag<double>(scatter, o, "--amplitude", "amplitude", "gaussian amplitude");
  flag<double>(scatter, o, "--width", "width", "gaussian width");
  flag<double>(scatter, o, "--rmax", "r_max", "outer radius");
  flag<int>(scatter, o, "--nr", "steps", "radial steps");
  flag<std::vector<int>>(scatter, o, "--gp-n", "gp_n_values", "particle numbers for the GP-scaling check");

  auto* gp = app.add_subcommand("gp", "Gross-Pitaevskii ground state");
  common(gp, o, config_path);
  flag<int>(gp, o, "--dim", "dim", "spatial dimension");
  flag<std::string>(gp, o, "--trap", "trap", "harmonic | quartic");
  flag<double>(gp, o, "--g", "g", "contact coupling");
  flag<int>(gp, o, "--grid-n", "grid_n", "points per axis");
  flag<double>(gp, o, "--grid-L", "grid_L", "box half-width");
  flag<double>(gp, o, "--tol", "tol", "energy tolerance");
  flag<bool>(gp, o, "--dump", "dump", "write phi and rho in the binary field format");

  auto* nbody = app.add_subcommand("nbody", "symmetric N-body ground state");
  common(nbody, o, config_path);
  flag<int>(nbody, o, "--N", "N", "particle count");
  flag<int>(nbody, o, "--d", "d", "dimension per particle");
  flag<std::string>(nbody, o, "--trap", "trap", "harmonic | quartic");
  flag<std::string>(nbody, o, "--pair", "pair", "none | gaussian:amp,width | square_well:depth,radius");
  flag<std::string>(nbody, o, "--scaling", "scaling", "none | meanfield | gp");
  flag<double>(nbody, o, "--g", "g", "coupling of the gp scaling");
  flag<int>(nbody, o, "--grid-n", "grid_n", "points per axis");
  flag<double>(nbody, o, "--grid-L", "grid_L", "box half-width");
  flag<bool>(nbody, o, "--dump", "dump", "write rho_N in the binary field format");

  auto* diffuse = app.add_subcommand("diffuse", "Euler-Maruyama ensemble, stopping times and path entropy");
  common(diffuse, o, config_path);
  flag<std::string>(diffuse, o, "--drift-from", "drift_from", "density file | ou | zero");
  flag<std::string>(diffuse, o, "--reference", "reference", "one-particle density file | ou | zero");
  flag<int>(diffuse, o, "--N", "N", "particle count");
  flag<int>(diffuse, o, "--d", "d", "dimension per particle");
  flag<double>(diffuse, o, "--dt", "dt", "time step");
  flag<double>(diffuse, o, "--T", "T", "horizon");
  flag<int>(diffuse, o, "--paths", "paths", "number of paths");
  flag<double>(diffuse, o, "--delta", "delta", "exclusion radius exponent offset");

  auto* chaos = app.add_subcommand("chaos", "propagation-of-chaos sweep over N");
  common(chaos, o, config_path);
  chaos->add_flag_callback("--emit-plot-data", [&o] { o.section["emit_plot_data"] = true; },
                           "also write (N, metric) series");

  auto* run = app.add_subcommand("run", "run the command named in a config file");
  common(run, o, config_path);
  run->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (version) {
    std::cout << "gpchaos " << cli::kArtifactVersion << " (spec " << cli::kSpecVersion << ")" << std::endl;
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help() << std::endl;
    return 2;
  }

  core::configure_threads_from_env();
  try {
    json j = config_path.empty() ? json::object() : load_file(config_path);
    if (!j.is_object()) throw Error(ErrorKind::kValidation, "config must be a JSON object", "config");
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub != "run") j["command"] = sub;
    const std::string command = j.value("command", "");
    for (const auto& [k, v] : o.top.items()) j[k] = v;
    for (const auto& [k, v] : o.section.items()) j[command][k] = v;
    const auto config = cli::parse_config(j);
    const auto result = cli::run(config);
    json summary = result.summary;
    summary["outputs"] = result.outputs;
    std::cout << summary.dump(2) << std::endl;
    return 0;
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(Error(ErrorKind::kInvariant, e.what()));
  }
}
