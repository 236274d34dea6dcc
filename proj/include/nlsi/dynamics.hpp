#pragma once

#include <string>
#include <vector>

#include "nlsi/variational.hpp"

namespace nlsi {

enum class BlowupKind { none, detected, unresolved };
std::string to_string(BlowupKind k);

struct BlowupVerdict {
  BlowupKind kind = BlowupKind::none;
  double t_star = 0;  // time of detection (lower bound for the blowup time)
  std::string criterion;
  /// 16 (S(u0) - S(φ)); an upper bound for d²/dt² ||xu||² on ℬ_ω. NaN without a ground state.
  double concavity_bound = 0;
  /// Zero of the quadratic extrapolation of the virial at detection.
  double predicted_vanishing = 0;
};

enum class TimeScheme {
  strang,        // phase rotation / Crank-Nicolson / phase rotation
  conservative,  // Crank-Nicolson with the discrete-gradient nonlinearity
};
std::string to_string(TimeScheme s);
TimeScheme scheme_from_string(const std::string& name);

struct SimulationOptions {
  TimeScheme scheme = TimeScheme::strang;
  double dt = 1e-3;
  double t_max = 1.0;
  int sample_every = 10;  // steps between trace samples
  bool potential_on = true;
  bool nonlinearity_on = true;
  double drift_tolerance = 1e-6;
  double blowup_factor = 1e3;  // grad2(t) >= factor * grad2(0)
  /// Halve dt each time grad2 doubles relative to grad2(0), keeping dt on
  /// the local time scale of a concentrating solution.
  bool adaptive = false;
  long max_steps = 50000000;
  /// Fixed-point iteration of the conservative scheme.
  double fixed_point_tolerance = 1e-14;
  int max_fixed_point = 60;
  /// Nodes with |u| above half its maximum required to call the state resolved.
  int min_core_nodes = 6;
  /// Ground state for ℬ_ω membership, the action gap and the concavity bound.
  const GroundState* reference = nullptr;
};

struct SimulationTrace {
  std::vector<double> times, mass, energy, action, virial, Q, grad2;
  std::vector<SetMembership> membership;  // empty without a reference
  BlowupVerdict blowup;
  double dt = 0;  // initial step
  int steps = 0;
  std::string grid;  // grid description
  Profile final_state;
};

/// Strang splitting: half-step pointwise phase rotation by |u|^{p-1}, a
/// Crank-Nicolson step of the linear operator -Δ - V, and a second half
/// rotation. The conservative scheme replaces the splitting by a
/// Crank-Nicolson step of the full equation whose nonlinear term is the
/// discrete gradient of ||u||^{p+1}_{L^{p+1}}, so the discrete energy is
/// conserved up to the fixed-point tolerance.
/// Mass is conserved to roundoff; the run stops at t_max, on blowup
/// detection, or when the energy drift exceeds the tolerance (verdict
/// unresolved).
SimulationTrace simulate(const Profile& u0, const ModelParams& params, const SimulationOptions& options);

/// Max relative deviation between the central second difference of the
/// virial and 8Q over interior samples, relative to max |8Q| on the window.
/// last < 0 means the whole trace.
double virial_consistency(const SimulationTrace& trace, int first = 0, int last = -1);

/// Smooth cutoff: 1 on [0, 1], 0 on [2, ∞), e^{-1/s} gluing in between.
double cutoff(double s);

/// χ(|x|/M) φ^{λ0}(x).
Profile build_cutoff_data(const GroundState& gs, double lambda0, double M);

/// RMS width sqrt(||xv||² / ||v||²).
double profile_width(const Profile& v);

/// Blowup test on a trace in progress: grad2 has grown by `factor` and the
/// quadratic extrapolation of the last three virial samples vanishes at a
/// finite future time.
BlowupVerdict detect_blowup(const SimulationTrace& trace, double factor = 1e3);

struct InvarianceReport {
  bool ran = false;  // false when u0 is not in ℬ_ω
  bool all_in_B = false;
  int first_exit = -1;
  double min_action_margin = 0, min_mass_margin = 0, min_lp1_margin = 0, min_q_margin = 0;
  double max_action_drift = 0;  // max |S(u(t)) - S(u0)| / |S(u0)|
  double max_second_difference = 0;  // max over interior samples of Δ²virial
};

InvarianceReport monitor_invariance(const SimulationTrace& trace, const GroundState& gs);

/// Header t,mass,energy,action,virial,Q,grad2,in_A,in_B at %.17g.
void write_trace_csv(const SimulationTrace& trace, const std::string& path);

}  // namespace nlsi
