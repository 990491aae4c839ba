#pragma once

#include <string>
#include <vector>

#include "gpchaos/chaos/chaos.hpp"
#include "gpchaos/cli/config.hpp"
#include "gpchaos/error.hpp"
#include "json.hpp"

namespace gpchaos::cli {

struct RunResult {
  nlohmann::json summary;            // also written as <command>_<hash>.json
  std::vector<std::string> outputs;  // every file written
};

/// Validates the config, runs the command and writes its artifacts under
/// output_dir. Files are named <command>_<hash>.<ext> and written atomically.
RunResult run(const ExperimentConfig& config);

/// 2 for validation-type errors, 3 for numerical failures.
int exit_status(ErrorKind kind);

/// {"error": {kind, message, subject, exit_status, ...}}
nlohmann::json error_payload(const Error& error);

/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const std::string& path, const std::string& content);

/// Report rows as CSV: the fixed metric columns first, then diagnostics.
std::string chaos_csv(const chaos::ChaosReport& report, const std::string& header_comment);

/// Long-format (N, metric, value, stderr) series for plotting.
std::string chaos_plot_csv(const chaos::ChaosReport& report, const std::string& header_comment);

nlohmann::json chaos_json(const chaos::ChaosReport& report);

chaos::SweepConfig sweep_config(const ExperimentConfig& config);

}  // namespace gpchaos::cli
