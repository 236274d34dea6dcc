#pragma once

#include <stdexcept>
#include <vector>

#include "nlsi/params.hpp"
#include "nlsi/profile.hpp"

namespace nlsi {

/// Raised when a profile cannot be represented on its grid (dilation below
/// grid resolution).
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when L_ω(v) <= 0, i.e. the frequency is not above ω₀ for this
/// profile or the discretization failed.
struct NotAdmissible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FunctionalReport {
  double mass = 0;     // ||v||²_{L²}
  double grad2 = 0;    // ||∇v||²_{L²}
  double G = 0;        // potential term
  double Lp1 = 0;      // ||v||^{p+1}_{L^{p+1}}
  double L_omega = 0;  // grad2 + ω mass - G
  double E = 0;
  double S = 0;
  double K = 0;
  double Q = 0;
};

/// Fills the derived fields of a report from (mass, grad2, G, Lp1).
FunctionalReport assemble_report(double mass, double grad2, double G, double Lp1, const ModelParams& params);

/// The discrete model on one grid: quadrature weights, stiffness matrix and
/// the potential form G(v) = v^H P v. All functionals, the stationary
/// residual and the ground-state solvers use the same matrices, so the
/// discrete action is exactly consistent with its gradient.
class DiscreteModel {
 public:
  DiscreteModel(GridPtr grid, ModelParams params);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const ModelParams& params() const { return params_; }
  const SymBand<double>& potential_form() const { return potential_; }
  /// Diagonal potential γ|x|^{-α} per node (empty for the delta potential).
  const std::vector<double>& potential_diagonal() const { return vdiag_; }

  double mass(std::span<const cplx> v) const;
  double grad2(std::span<const cplx> v) const;
  double G(std::span<const cplx> v) const;
  double Lp1(std::span<const cplx> v) const;
  /// ||xv||² (virial norm).
  double variance(std::span<const cplx> v) const;

  FunctionalReport report(std::span<const cplx> v) const;

  /// S'_ω(v) in the W inner product: -Δv + ωv - W^{-1}P v - |v|^{p-1}v.
  std::vector<cplx> action_gradient(std::span<const cplx> v) const;
  /// Linear part A = K + ωW - P (times W) as a symmetric band matrix.
  SymBand<double> linear_operator(double omega) const;

 private:
  GridPtr grid_;
  ModelParams params_;
  std::vector<double> gweights_;
  std::vector<double> vdiag_;
  SymBand<double> potential_;
};

/// All functionals of v. Tagged profiles use closed forms where they exist.
FunctionalReport eval_report(const Profile& v, const ModelParams& params);
FunctionalReport eval_report(const Profile& v, const DiscreteModel& model);

/// G(v) = γ∫|v|²|x|^{-α} (inverse power) or γ|v(0)|² (delta).
double eval_G(const Profile& v, const ModelParams& params);

/// Mass-preserving dilation v^λ(x) = λ^{N/2} v(λx). Tagged profiles are
/// rescaled in closed form; grid profiles are interpolated onto the same grid.
Profile scale(const Profile& v, double lambda);

struct NehariProjection {
  double lambda1;
  Profile w;
};

/// Amplitude rescaling λ₁v onto K_ω = 0, λ₁ = (L_ω/Lp1)^{1/(p-1)}.
NehariProjection nehari_project(const Profile& v, const ModelParams& params);
NehariProjection nehari_project(const Profile& v, const DiscreteModel& model);

/// ||S'_ω(φ)||_{L²} / ||φ||_{L²} with the discrete operators of the grid.
double residual_stationary(const Profile& phi, const ModelParams& params);
double residual_stationary(const Profile& phi, const DiscreteModel& model);

}  // namespace nlsi
