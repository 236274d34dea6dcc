#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nlsi/config.hpp"

namespace nlsi {

inline constexpr const char* kToolVersion = "0.1.0";

const std::vector<std::string>& subcommands();

/// Record of one run; written to <out>/manifest.json.
struct RunManifest {
  std::string command;
  std::string status = "running";  // ok | failed
  std::string error;
  Config config;
  std::vector<std::string> artifacts;  // file names relative to the output directory
  nlohmann::json verdicts = nlohmann::json::object();
  double wall_seconds = 0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& m, const std::string& dir);
RunManifest read_manifest(const std::string& dir);

/// Runs one subcommand with output in `dir`. Failures inside a run are
/// caught and recorded: the manifest is written with status failed and the
/// artifacts produced so far. Throws ConfigError for configurations the
/// subcommand cannot use and std::invalid_argument for unknown commands.
RunManifest run_command(const std::string& command, const Config& config, const std::string& dir);

/// summary.txt plus two-column plot files derived from the CSV artifacts:
/// scaling_curve.dat (λ, S), omega_scan.dat (ω, S''(1)), virial.dat (t, ||xu||²).
/// Returns the files written.
std::vector<std::string> emit_report(const RunManifest& m, const std::string& dir);

/// Writes rows of doubles at 17 significant digits.
void write_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows);

int exit_code(const RunManifest& m);

}  // namespace nlsi
