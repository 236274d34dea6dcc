#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsi/dynamics.hpp"

namespace nlsi {

struct GridConfig {
  GridKind kind = GridKind::radial;
  double R = 16.0;
  std::size_t M = 1536;
  int order = 4;
  double grade = 2.0;
  GridPtr build(int N) const { return build_grid(kind, N, R, M, order, grade); }
};

struct DynamicsConfig {
  TimeScheme scheme = TimeScheme::conservative;
  double dt = 1e-4;
  double t_max = 5.0;
  int sample_every = 10;
  bool adaptive = true;
  bool potential_on = true;
  bool nonlinearity_on = true;
  double drift_tolerance = 1e-6;
  double blowup_factor = 1e3;
  /// ground_state | cutoff | gaussian
  std::string initial = "cutoff";
  double gaussian_width = 1.0;
  double gaussian_amplitude = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  double lambda0 = 1.2;
  double cutoff_M = 10.0;  // in units of the ground-state RMS width
  std::vector<double> omegas;
  int refine = 0;
  double refine_width = 1e-3;
  std::vector<double> lambdas{1.05, 1.2, 1.5, 2.0};
  int key_samples = 10000;
  int competitor_samples = 1000;
  double gchain_alpha = 0, gchain_beta = 0;  // 0: not set
  int gchain_pairs = 0;
  std::size_t gchain_points = 10000;
  double gchain_beta_max = 20.0;
};

/// Flat sectioned key-value configuration ([model], [grid], [solver],
/// [dynamics], [experiment]). Every model key is required when the model is
/// used; unknown sections or keys are errors.
struct Config {
  bool has_model = false;
  ModelParams model;
  GridConfig grid;
  GroundStateMethod method = GroundStateMethod::gradient_flow;
  SolverOptions solver;
  DynamicsConfig dynamics;
  ExperimentConfig experiment;

  /// Model parameters; throws std::invalid_argument if [model] was absent.
  const ModelParams& require_model() const;
  SimulationOptions simulation_options() const;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);
/// Text form that parses back to the same Config (floats at 17 digits).
std::string to_config_text(const Config& c);
nlohmann::json to_json(const Config& c);
Config config_from_json(const nlohmann::json& j);

}  // namespace nlsi
