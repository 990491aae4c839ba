#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace gpchaos::cli {

extern const char* const kArtifactVersion;
extern const char* const kSpecVersion;

struct ScatterParams {
  std::string potential = "square_well";  // square_well | gaussian
  double depth = 2.0;                     // square well height V0
  double radius = 1.0;                    // square well radius R
  double amplitude = 1.0;                 // gaussian
  double width = 0.5;                     // gaussian
  double r_max = 8.0;
  int steps = 4000;
  double g = 1.0;
  std::vector<int> gp_n_values;  // re-solve the GP-rescaled potential for these N
};

struct GpParams {
  int dim = 3;
  std::string trap = "harmonic";
  double g = 0.0;
  int grid_n = 64;
  double grid_L = 6.0;
  double tol = 1e-8;
  int max_iter = 200000;
  double kernel_amplitude = 0.0;  // > 0 adds a Gaussian Hartree kernel
  double kernel_width = 0.5;
  bool dump = false;
};

struct NBodyParams {
  int n = 2;
  int d = 1;
  std::string trap = "harmonic";
  std::string pair = "none";     // none | gaussian:amp,width | square_well:depth,radius
  std::string scaling = "none";  // none | meanfield | gp
  double g = 1.0;                // coupling of the gp scaling
  int grid_n = 41;
  double grid_L = 5.0;
  double tol = 1e-12;
  double residual_tol = 1e-6;
  std::string solver = "locally_optimal";  // locally_optimal | imaginary_time
  int joint_dim_cap = 6;
  bool dump = false;
};

struct DiffuseParams {
  std::string drift_from = "ou";  // ou | zero | path to a density dump
  std::string reference = "ou";   // ou | zero | path to a one-particle density dump
  int n = 1;
  int d = 1;
  double dt = 0.01;
  double T = 1.0;
  int paths = 1000;
  double kappa = 1.0;
  double delta = 4.0 / 51.0;
  double radius_prefactor = 1.0;
  double radius_exponent = 0.0;  // 0 selects 1/d
  double half_width = 0.0;       // 0: the density grid's box, or no box
  int survival_points = 11;
};

struct ChaosParams {
  std::vector<int> n_values{2, 3, 4};
  int d = 1;
  std::string trap = "harmonic";
  bool interacting = true;
  double pair_amplitude = 2.0;
  double pair_width = 0.5;
  double grid_L = 5.0;
  int grid_n = 37;
  double tol = 1e-12;
  double dt = 0.01;
  double T = 1.0;
  int paths = 10000;
  double survival_t = 1.0;
  double radius_prefactor = 0.02;
  double radius_exponent = 1.0;
  double radius_delta = 2.0;
  int w2_samples = 384;
  int bootstrap = 32;
  std::string metric = "truncated_euclidean";  // truncated_euclidean | euclidean
  double truncation = 1.0;
  bool emit_plot_data = false;
};

struct ExperimentConfig {
  std::string command;  // scatter | gp | nbody | diffuse | chaos
  std::uint64_t seed = 1;
  std::string output_dir = "gpchaos_out";
  std::uint64_t max_grid_points = std::uint64_t{1} << 27;
  ScatterParams scatter;
  GpParams gp;
  NBodyParams nbody;
  DiffuseParams diffuse;
  ChaosParams chaos;
};

/// Strict parse: unknown keys and wrong types raise Validation errors naming
/// the offending field. Missing keys keep their defaults.
ExperimentConfig parse_config(const nlohmann::json& j);

/// Full serialization; only the section of the active command is included.
nlohmann::json to_json(const ExperimentConfig& config);

/// Range checks on every field of the active section.
void validate(const ExperimentConfig& config);

/// FNV-1a over the canonical (key-sorted) dump, excluding output_dir.
std::string config_hash(const ExperimentConfig& config);

/// {config_hash, artifact_version, spec_version, command, seed}
nlohmann::json provenance(const ExperimentConfig& config);

}  // namespace gpchaos::cli
