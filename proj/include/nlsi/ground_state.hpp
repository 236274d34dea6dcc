#pragma once

#include <string>

#include "nlsi/functionals.hpp"

namespace nlsi {

enum class GroundStateMethod { gradient_flow, nehari_descent };

std::string to_string(GroundStateMethod m);
GroundStateMethod method_from_string(const std::string& name);

/// Failure of a ground-state solve (collapse to zero, non-convergence).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpectralEstimate {
  double omega0 = 0;      // max(0, -lambda_min)
  double lambda_min = 0;  // smallest eigenvalue of -Δ - γ|x|^{-α} on the grid
  double rayleigh = 0;    // Rayleigh quotient of the minimizer
  Profile rayleigh_minimizer;
  int iterations = 0;
  bool converged = false;
  /// lambda_min >= 0: the form has no bound state on the grid and the
  /// infimum over R^N is approached by spreading (ω₀ = 0).
  bool box_limited = false;
};

/// ω₀ = -inf{||∇v||² - G(v) : ||v||_{L²} = 1} on the grid, by inertia
/// bisection on K - P - σW followed by normalized inverse iteration.
SpectralEstimate estimate_omega0(const ModelParams& params, const GridPtr& grid);

/// Margin required above ω₀ before ground-state work.
double omega0_margin(double omega0);

struct SolverOptions {
  double tolerance = 1e-9;   // stationary residual target
  double acceptable = 1e-8;  // accepted once the residual stagnates at roundoff
  int stagnation_window = 40;
  int max_iterations = 20000;
  double flow_step = 1e3;   // initial imaginary-time step (semi-implicit)
  double min_step = 1e-8;
  bool certify_omega0 = true;
};

struct GroundState {
  Profile profile;
  ModelParams params;
  double residual = 0;
  FunctionalReport report;
  double d_omega = 0;
  GroundStateMethod method = GroundStateMethod::gradient_flow;
  int iterations = 0;
  double omega0 = 0;
};

/// Gaussian initial guess exp(-ω|x|²/2)-type: width 1/√ω.
Profile default_initial_guess(const GridPtr& grid, double omega);

/// Ground state by semi-implicit imaginary-time flow with Nehari rescaling
/// (gradient_flow) or by preconditioned descent of the Nehari level
/// L_ω^{(p+1)/(p-1)} / Lp1^{2/(p-1)} (nehari_descent).
GroundState solve_ground_state(const ModelParams& params, const GridPtr& grid, const Profile& init,
                               GroundStateMethod method, const SolverOptions& options = {});

struct VariationalLevels {
  double d1;  // S_ω(φ)
  double d2;  // (p-1)/(2(p+1)) Lp1(φ)
  double d3;  // (p-1)/(2(p+1)) L_ω(φ)
  double max_relative_gap;
};

VariationalLevels compute_d(const FunctionalReport& report, const ModelParams& params);
/// Throws SolverError when the three levels disagree beyond 1e-8 (K_ω(φ) ≠ 0).
VariationalLevels compute_d(const GroundState& gs);

/// Profile of the one-dimensional soliton solving -φ'' + ωφ - φ^p = 0 for
/// x ≠ 0 with the jump φ'(0+) = -(γ/2)φ(0) (γ = 0: the free soliton),
/// computed by bisection on φ(0) with RK4 integration outward.
struct ShootingSoliton {
  Profile profile;
  double phi0 = 0;  // bisected φ(0)
  double mass = 0, grad2 = 0, Lp1 = 0, G = 0;
  double S = 0;     // action from the ODE quadratures
  int bisections = 0;
};

ShootingSoliton shoot_soliton(double omega, double p, double delta_gamma, const GridPtr& grid);

/// γ = 0 reference soliton (N = 1).
ShootingSoliton reference_soliton_gamma0(double omega, double p, const GridPtr& grid);

/// CSV (node, re, im) plus a JSON header with params, grid and report.
void save_ground_state(const GroundState& gs, const std::string& csv_path, const std::string& json_path);
GroundState load_ground_state(const std::string& csv_path, const std::string& json_path);

}  // namespace nlsi
