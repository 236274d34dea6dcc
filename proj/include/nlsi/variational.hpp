#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlsi/ground_state.hpp"

namespace nlsi {

/// A computed quantity contradicted an inequality that must hold under the
/// stated hypotheses.
struct ProofViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// S(λ) = Aλ² + B - Cλ^α - Dλ^β, the action along the dilation v^λ.
struct ActionCurve {
  double A = 0, B = 0, C = 0, D = 0;
  double alpha = 0, beta = 0;
  double p = 0;

  double S(double l) const;
  double dS(double l) const;
  double d2S(double l) const;
  double d3S(double l) const;
  double Q(double l) const { return l * dS(l); }
  double K(double l) const;
  /// ∂_λ Q(v^λ) = S'(λ) + λS''(λ).
  double dQ(double l) const { return dS(l) + l * d2S(l); }
  /// Maximizer of the two-term curve when C = 0.
  double argmax_free() const;
};

ActionCurve action_curve(const FunctionalReport& report, const ModelParams& params);
ActionCurve action_curve(const Profile& v, const ModelParams& params);

/// S''(1) of the ground state's dilation curve; <= 0 is the instability condition.
double second_variation_at_1(const GroundState& gs);

// ---------------------------------------------------------------- g-chain

/// expm1(z) - z, accurate for small |z|.
double expm1_minus(double z);

double g1(double l, double alpha, double beta);
double g2(double l, double alpha, double beta);
double g3(double l, double alpha, double beta);
double dg3(double l, double alpha, double beta);

struct GChainReport {
  double alpha = 0, beta = 0;
  std::size_t points = 0;
  double min_g1 = 0, max_g2 = 0, min_g3 = 0, max_dg3 = 0;
  double g1_near_1 = 0;  // g1(1 - 1e-6); the limit at 1 is 0
  double g2_at_1 = 0, g3_at_1 = 0;
  int violations = 0;
  std::string worst;  // description of the worst violation, empty if none
};

/// Evaluates the chain on λ in (0, 1]; g1 only on (0, 1 - 1e-6].
/// Throws ProofViolation on a sign violation beyond tol scaled by the
/// magnitude of the terms.
GChainReport g_chain(double alpha, double beta, std::span<const double> lambdas, double tol = 1e-12);

/// Uniform λ grid of n points in (0, 1].
std::vector<double> lambda_grid(std::size_t n);

struct GChainSweep {
  std::vector<GChainReport> pairs;
  int total_violations = 0;
};

/// Random (α, β) with 0 < α < 2 < β <= beta_max; violations are collected
/// rather than thrown.
GChainSweep g_chain_sweep(int pairs, std::size_t points, std::uint64_t seed, double beta_max = 20.0,
                          int workers = 1);

// ------------------------------------------------------------ key inequality

enum class KeyStatus { hypotheses_not_met, holds, holds_with_warnings, violated };
std::string to_string(KeyStatus s);

struct KeyInequalityReport {
  KeyStatus status = KeyStatus::hypotheses_not_met;
  FunctionalReport v;
  double mass_slack = 0, lp1_slack = 0, q_slack = 0;  // >= 0: hypothesis met
  double lhs = 0;                                     // Q(v)/2
  double rhs = 0;                                     // S(v) - S(φ)
  double margin = 0;                                  // rhs - lhs + tolerance
  double lambda0 = 0;
  double f_lambda0 = 0, f_1 = 0;
  double mass_bound = 0;       // right side of the ω·mass bound
  double potential_bound = 0;  // right side of the G bound
  std::vector<std::string> warnings;
};

/// Checks Q(v)/2 <= S(v) - S(φ) + tol under mass(v) <= mass(φ),
/// Lp1(v) >= Lp1(φ), Q(v) <= 0 (each with relative slack 1e-10), together
/// with the intermediate bounds of the proof chain as warnings. Throws
/// ProofViolation when the final inequality fails at a point with S''(1) <= 0.
KeyInequalityReport key_inequality(const FunctionalReport& v, const GroundState& gs, double tol = 1e-8);
KeyInequalityReport key_inequality(const Profile& v, const GroundState& gs, double tol = 1e-8);

struct KeySweep {
  int samples = 0;     // hypothesis-satisfying inputs evaluated
  int rejected = 0;    // draws failing the hypotheses
  int warnings = 0;
  int violations = 0;
  double min_margin = 0;
  std::vector<KeyInequalityReport> counterexamples;
};

/// Randomized admissible inputs built from dilated, rescaled and perturbed
/// ground states until `samples` of them satisfy the hypotheses.
KeySweep key_inequality_sweep(const GroundState& gs, int samples, std::uint64_t seed, int workers = 1);

struct CompetitorSweep {
  int samples = 0;
  int K_violations = 0;       // K(v) < -tol |S(φ)|
  int action_violations = 0;  // S(v) < S(φ) - tol |S(φ)|
  double min_K = 0;
  double min_action_gap = 0;  // min S(v) - S(φ)
};

/// Random competitors rescaled to ||v||_{p+1} = ||φ||_{p+1}; every one must
/// have K(v) >= 0 and S(v) >= S(φ).
CompetitorSweep competitor_sweep(const GroundState& gs, int samples, std::uint64_t seed, int workers = 1,
                                 double tol = 1e-8);

// ---------------------------------------------------------------- membership

struct SetMembership {
  bool in_A = false;
  bool in_B = false;
  // signed slack, positive when the condition is met
  double action_margin = 0;  // S(φ) - S(v), strict
  double mass_margin = 0;    // mass(φ) - mass(v), non-strict
  double lp1_margin = 0;     // Lp1(v) - Lp1(φ), strict
  double q_margin = 0;       // -Q(v), strict
};

/// Non-strict conditions accept a relative slack of 1e-10.
SetMembership membership(const FunctionalReport& v, const GroundState& gs);
SetMembership membership(const Profile& v, const GroundState& gs);

// ---------------------------------------------------------- scaling family

struct ScalingPoint {
  double lambda;
  double S, dS, d2S, Q, dQ;
  SetMembership member;
  bool ok;
};

struct ScalingFamilyReport {
  double S2_at_1 = 0;
  double coefficient_gap = 0;  // α(2-α)C - β(β-2)D, <= 0 under the condition
  std::vector<ScalingPoint> points;
};

/// For each λ > 1 checks S(λ) < S(1), S'(λ) < 0, S''(λ) < S''(1), Q(λ) < 0,
/// ∂_λQ(λ) < 0 from the closed-form curve and ℬ_ω membership of the
/// dilated ground state. Throws std::invalid_argument if S''(1) > 0 and
/// ProofViolation on any failed condition.
ScalingFamilyReport check_scaling_family(const GroundState& gs, std::span<const double> lambdas);

// ---------------------------------------------------------------- ω-scan

struct ScanRow {
  double omega = 0;
  bool ok = false;
  std::string error;
  double S = 0, E = 0, d = 0, S2 = 0;
  int sign = 0;  // sign of S''(1)
};

struct ScanOptions {
  GroundStateMethod method = GroundStateMethod::gradient_flow;
  SolverOptions solver;
  int refine = 0;  // bisection steps on the sign-change bracket
  double refine_width = 0;  // stop refining once the bracket is narrower
  int workers = 1;
};

struct ScanResult {
  std::vector<ScanRow> rows;  // sorted by ω
  bool bracketed = false;
  double omega_pos = 0, omega_nonpos = 0;
  /// Smallest scanned ω with S''(1) <= 0 (NaN if none).
  double omega1_upper = 0;
};

using GridFactory = std::function<GridPtr(double omega)>;

ScanResult omega_scan(const ModelParams& base, std::span<const double> omegas, const GridFactory& grid_for,
                      const ScanOptions& options = {});

}  // namespace nlsi
