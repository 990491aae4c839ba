#include "gpchaos/cli/config.hpp"

#include <cmath>
#include <set>

#include "gpchaos/error.hpp"

namespace gpchaos::cli {

const char* const kArtifactVersion = GPCHAOS_VERSION;
const char* const kSpecVersion = "1";

namespace {

using nlohmann::json;

// Reads fields from one JSON object and rejects whatever it did not consume.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorKind::kValidation, "expected an object", path_.empty() ? "config" : path_);
  }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      require(v->is_number(), ErrorKind::kValidation, "expected a number", name(key));
      out = v->get<double>();
      require(std::isfinite(out), ErrorKind::kValidation, "expected a finite number", name(key));
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      require(v->is_number_integer(), ErrorKind::kValidation, "expected an integer", name(key));
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      require(v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0),
              ErrorKind::kValidation, "expected a nonnegative integer", name(key));
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      require(v->is_boolean(), ErrorKind::kValidation, "expected true or false", name(key));
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      require(v->is_string(), ErrorKind::kValidation, "expected a string", name(key));
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      require(v->is_array(), ErrorKind::kValidation, "expected an array of integers", name(key));
      out.clear();
      for (const auto& e : *v) {
        require(e.is_number_integer(), ErrorKind::kValidation, "expected an array of integers", name(key));
        out.push_back(e.get<int>());
      }
    }
  }
  const json* section(const char* key) { return take(key); }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      require(used_.count(key) != 0, ErrorKind::kValidation, "unknown key", name(key.c_str()));
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read(Reader& r, ScatterParams& p) {
  r.get("potential", p.potential);
  r.get("depth", p.depth);
  r.get("radius", p.radius);
  r.get("amplitude", p.amplitude);
  r.get("width", p.width);
  r.get("r_max", p.r_max);
  r.get("steps", p.steps);
  r.get("g", p.g);
  r.get("gp_n_values", p.gp_n_values);
}

json write(const ScatterParams& p) {
  return {{"potential", p.potential}, {"depth", p.depth}, {"radius", p.radius}, {"amplitude", p.amplitude},
          {"width", p.width},         {"r_max", p.r_max}, {"steps", p.steps},   {"g", p.g},
          {"gp_n_values", p.gp_n_values}};
}

void read(Reader& r, GpParams& p) {
  r.get("dim", p.dim);
  r.get("trap", p.trap);
  r.get("g", p.g);
  r.get("grid_n", p.grid_n);
  r.get("grid_L", p.grid_L);
  r.get("tol", p.tol);
  r.get("max_iter", p.max_iter);
  r.get("kernel_amplitude", p.kernel_amplitude);
  r.get("kernel_width", p.kernel_width);
  r.get("dump", p.dump);
}

json write(const GpParams& p) {
  return {{"dim", p.dim},
          {"trap", p.trap},
          {"g", p.g},
          {"grid_n", p.grid_n},
          {"grid_L", p.grid_L},
          {"tol", p.tol},
          {"max_iter", p.max_iter},
          {"kernel_amplitude", p.kernel_amplitude},
          {"kernel_width", p.kernel_width},
          {"dump", p.dump}};
}

void read(Reader& r, NBodyParams& p) {
  r.get("N", p.n);
  r.get("d", p.d);
  r.get("trap", p.trap);
  r.get("pair", p.pair);
  r.get("scaling", p.scaling);
  r.get("g", p.g);
  r.get("grid_n", p.grid_n);
  r.get("grid_L", p.grid_L);
  r.get("tol", p.tol);
  r.get("residual_tol", p.residual_tol);
  r.get("solver", p.solver);
  r.get("joint_dim_cap", p.joint_dim_cap);
  r.get("dump", p.dump);
}

json write(const NBodyParams& p) {
  return {{"N", p.n},
          {"d", p.d},
          {"trap", p.trap},
          {"pair", p.pair},
          {"scaling", p.scaling},
          {"g", p.g},
          {"grid_n", p.grid_n},
          {"grid_L", p.grid_L},
          {"tol", p.tol},
          {"residual_tol", p.residual_tol},
          {"solver", p.solver},
          {"joint_dim_cap", p.joint_dim_cap},
          {"dump", p.dump}};
}

void read(Reader& r, DiffuseParams& p) {
  r.get("drift_from", p.drift_from);
  r.get("reference", p.reference);
  r.get("N", p.n);
  r.get("d", p.d);
  r.get("dt", p.dt);
  r.get("T", p.T);
  r.get("paths", p.paths);
  r.get("kappa", p.kappa);
  r.get("delta", p.delta);
  r.get("radius_prefactor", p.radius_prefactor);
  r.get("radius_exponent", p.radius_exponent);
  r.get("half_width", p.half_width);
  r.get("survival_points", p.survival_points);
}

json write(const DiffuseParams& p) {
  return {{"drift_from", p.drift_from},
          {"reference", p.reference},
          {"N", p.n},
          {"d", p.d},
          {"dt", p.dt},
          {"T", p.T},
          {"paths", p.paths},
          {"kappa", p.kappa},
          {"delta", p.delta},
          {"radius_prefactor", p.radius_prefactor},
          {"radius_exponent", p.radius_exponent},
          {"half_width", p.half_width},
          {"survival_points", p.survival_points}};
}

void read(Reader& r, ChaosParams& p) {
  r.get("n_values", p.n_values);
  r.get("d", p.d);
  r.get("trap", p.trap);
  r.get("interacting", p.interacting);
  r.get("pair_amplitude", p.pair_amplitude);
  r.get("pair_width", p.pair_width);
  r.get("grid_L", p.grid_L);
  r.get("grid_n", p.grid_n);
  r.get("tol", p.tol);
  r.get("dt", p.dt);
  r.get("T", p.T);
  r.get("paths", p.paths);
  r.get("survival_t", p.survival_t);
  r.get("radius_prefactor", p.radius_prefactor);
  r.get("radius_exponent", p.radius_exponent);
  r.get("radius_delta", p.radius_delta);
  r.get("w2_samples", p.w2_samples);
  r.get("bootstrap", p.bootstrap);
  r.get("metric", p.metric);
  r.get("truncation", p.truncation);
  r.get("emit_plot_data", p.emit_plot_data);
}

json write(const ChaosParams& p) {
  return {{"n_values", p.n_values},
          {"d", p.d},
          {"trap", p.trap},
          {"interacting", p.interacting},
          {"pair_amplitude", p.pair_amplitude},
          {"pair_width", p.pair_width},
          {"grid_L", p.grid_L},
          {"grid_n", p.grid_n},
          {"tol", p.tol},
          {"dt", p.dt},
          {"T", p.T},
          {"paths", p.paths},
          {"survival_t", p.survival_t},
          {"radius_prefactor", p.radius_prefactor},
          {"radius_exponent", p.radius_exponent},
          {"radius_delta", p.radius_delta},
          {"w2_samples", p.w2_samples},
          {"bootstrap", p.bootstrap},
          {"metric", p.metric},
          {"truncation", p.truncation},
          {"emit_plot_data", p.emit_plot_data}};
}

template <class Params>
void read_section(Reader& top, const char* key, Params& p) {
  if (const json* s = top.section(key)) {
    Reader r(*s, key);
    read(r, p);
    r.finish();
  }
}

void check(bool ok, const std::string& field, const std::string& message) {
  require(ok, ErrorKind::kValidation, message, field);
}

void check_positive(double v, const std::string& field) { check(v > 0.0, field, "must be positive"); }

void check_grid(int n, double L, int dim, std::uint64_t cap, const std::string& section) {
  check(n >= 8, section + ".grid_n", "needs at least 8 points per axis");
  check_positive(L, section + ".grid_L");
  check(dim >= 1, section, "dimension must be positive");
  const double points = std::pow(static_cast<double>(n), dim);
  check(points <= static_cast<double>(cap), section + ".grid_n",
        "grid has " + std::to_string(static_cast<std::uint64_t>(points)) + " points, over max_grid_points");
}

void check_dt(double dt, double T, const std::string& section) {
  check_positive(dt, section + ".dt");
  check_positive(T, section + ".T");
  check(dt <= T, section + ".dt", "dt must not exceed T");
  const double steps = T / dt;
  check(std::abs(steps - std::round(steps)) <= 1e-9 * steps, section + ".dt", "T / dt must be an integer");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader top(j, "");
  top.get("command", c.command);
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("max_grid_points", c.max_grid_points);
  read_section(top, "scatter", c.scatter);
  read_section(top, "gp", c.gp);
  read_section(top, "nbody", c.nbody);
  read_section(top, "diffuse", c.diffuse);
  read_section(top, "chaos", c.chaos);
  top.finish();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j = {{"command", c.command},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"max_grid_points", c.max_grid_points}};
  if (c.command == "scatter") j["scatter"] = write(c.scatter);
  if (c.command == "gp") j["gp"] = write(c.gp);
  if (c.command == "nbody") j["nbody"] = write(c.nbody);
  if (c.command == "diffuse") j["diffuse"] = write(c.diffuse);
  if (c.command == "chaos") j["chaos"] = write(c.chaos);
  return j;
}

void validate(const ExperimentConfig& c) {
  static const std::set<std::string> commands{"scatter", "gp", "nbody", "diffuse", "chaos"};
  check(commands.count(c.command) != 0, "command", "unknown command '" + c.command + "'");
  check(!c.output_dir.empty(), "output_dir", "must not be empty");
  check(c.max_grid_points >= 8, "max_grid_points", "must be at least 8");

  if (c.command == "scatter") {
    const auto& p = c.scatter;
    check(p.potential == "square_well" || p.potential == "gaussian", "scatter.potential",
          "must be square_well or gaussian");
    check(p.depth >= 0.0, "scatter.depth", "must be nonnegative");
    check_positive(p.radius, "scatter.radius");
    check(p.amplitude >= 0.0, "scatter.amplitude", "must be nonnegative");
    check_positive(p.width, "scatter.width");
    check_positive(p.r_max, "scatter.r_max");
    check(p.steps >= 100, "scatter.steps", "needs at least 100 steps");
    check_positive(p.g, "scatter.g");
    for (int n : p.gp_n_values) check(n >= 1, "scatter.gp_n_values", "particle numbers must be positive");
  } else if (c.command == "gp") {
    const auto& p = c.gp;
    check(p.dim >= 1 && p.dim <= 3, "gp.dim", "must be 1, 2 or 3");
    check(p.trap == "harmonic" || p.trap == "quartic", "gp.trap", "must be harmonic or quartic");
    check(p.g >= 0.0, "gp.g", "must be nonnegative");
    check_grid(p.grid_n, p.grid_L, p.dim, c.max_grid_points, "gp");
    check_positive(p.tol, "gp.tol");
    check(p.max_iter >= 1, "gp.max_iter", "must be positive");
    check(p.kernel_amplitude >= 0.0, "gp.kernel_amplitude", "must be nonnegative");
    check_positive(p.kernel_width, "gp.kernel_width");
  } else if (c.command == "nbody") {
    const auto& p = c.nbody;
    check(p.n >= 1, "nbody.N", "must be positive");
    check(p.d >= 1 && p.d <= 3, "nbody.d", "must be 1, 2 or 3");
    check(p.trap == "harmonic" || p.trap == "quartic", "nbody.trap", "must be harmonic or quartic");
    check(p.scaling == "none" || p.scaling == "meanfield" || p.scaling == "gp", "nbody.scaling",
          "must be none, meanfield or gp");
    check_positive(p.g, "nbody.g");
    check(p.joint_dim_cap >= 1 && p.joint_dim_cap <= 16, "nbody.joint_dim_cap", "must be in [1, 16]");
    check(p.n * p.d <= p.joint_dim_cap, "nbody.N", "N*d exceeds joint_dim_cap");
    check_grid(p.grid_n, p.grid_L, p.n * p.d, c.max_grid_points, "nbody");
    check_positive(p.tol, "nbody.tol");
    check_positive(p.residual_tol, "nbody.residual_tol");
    check(p.solver == "locally_optimal" || p.solver == "imaginary_time", "nbody.solver",
          "must be locally_optimal or imaginary_time");
  } else if (c.command == "diffuse") {
    const auto& p = c.diffuse;
    check(!p.drift_from.empty(), "diffuse.drift_from", "must be ou, zero or a density file");
    check(!p.reference.empty(), "diffuse.reference", "must be ou, zero or a density file");
    check(p.n >= 1, "diffuse.N", "must be positive");
    check(p.d >= 1 && p.d <= 3, "diffuse.d", "must be 1, 2 or 3");
    check_dt(p.dt, p.T, "diffuse");
    check(p.paths >= 1, "diffuse.paths", "must be positive");
    check_positive(p.kappa, "diffuse.kappa");
    check(p.delta >= 0.0, "diffuse.delta", "must be nonnegative");
    check(p.radius_prefactor >= 0.0, "diffuse.radius_prefactor", "must be nonnegative");
    check(p.radius_exponent >= 0.0, "diffuse.radius_exponent", "must be nonnegative");
    check(p.half_width >= 0.0, "diffuse.half_width", "must be nonnegative");
    check(p.survival_points >= 2, "diffuse.survival_points", "needs at least 2 points");
  } else if (c.command == "chaos") {
    const auto& p = c.chaos;
    check(!p.n_values.empty(), "chaos.n_values", "must not be empty");
    for (std::size_t i = 0; i < p.n_values.size(); ++i) {
      check(p.n_values[i] >= 2, "chaos.n_values", "particle numbers must be at least 2");
      check(i == 0 || p.n_values[i] > p.n_values[i - 1], "chaos.n_values", "must be strictly increasing");
    }
    check(p.d >= 1 && p.d <= 3, "chaos.d", "must be 1, 2 or 3");
    check(p.trap == "harmonic" || p.trap == "quartic", "chaos.trap", "must be harmonic or quartic");
    check(p.pair_amplitude >= 0.0, "chaos.pair_amplitude", "must be nonnegative");
    check_positive(p.pair_width, "chaos.pair_width");
    check_grid(p.grid_n, p.grid_L, p.d, c.max_grid_points, "chaos");
    check_positive(p.tol, "chaos.tol");
    check_dt(p.dt, p.T, "chaos");
    check(p.paths >= 2, "chaos.paths", "needs at least 2 paths");
    check(p.survival_t >= 0.0 && p.survival_t <= p.T, "chaos.survival_t", "must lie in [0, T]");
    check(p.radius_prefactor >= 0.0, "chaos.radius_prefactor", "must be nonnegative");
    check(p.radius_exponent >= 0.0, "chaos.radius_exponent", "must be nonnegative");
    check(p.radius_delta >= 0.0, "chaos.radius_delta", "must be nonnegative");
    check(p.w2_samples >= 2 && p.w2_samples <= 1024, "chaos.w2_samples", "must be in [2, 1024]");
    check(p.bootstrap >= 0, "chaos.bootstrap", "must be nonnegative");
    check(p.metric == "truncated_euclidean" || p.metric == "euclidean", "chaos.metric",
          "must be truncated_euclidean or euclidean");
    check_positive(p.truncation, "chaos.truncation");
  }
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

json provenance(const ExperimentConfig& config) {
  return {{"config_hash", config_hash(config)},
          {"artifact_version", kArtifactVersion},
          {"spec_version", kSpecVersion},
          {"command", config.command},
          {"seed", config.seed}};
}

}  // namespace gpchaos::cli
