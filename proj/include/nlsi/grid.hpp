#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlsi/banded.hpp"

namespace nlsi {

using cplx = std::complex<double>;

enum class GridKind { line1d, radial };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& name);

/// Surface measure |S^{N-1}| (2 for N = 1).
double sphere_area(int N);

/// Half-cell offset grid on [-R, R] (line1d, N = 1) or on the radial interval
/// (0, R) for radial functions in R^N. No node sits at the origin.
///
/// Radial grids may be graded: nodes are uniform in a computational
/// coordinate ξ with r = sqrt(ℓ² + ξ²) - ℓ (ℓ = grade, 0 for uniform r).
/// Functions of r that are smooth, kinked (a + b r) or have an r^{2-α} cusp
/// at the origin become even in ξ with higher regularity.
///
/// Values live at the nodes; first derivatives live on the staggered points
/// between nodes. The stiffness matrix K = D^T W_s D and the node weights W
/// define both the Dirichlet form ||∇v||² = v^H K v and the Laplacian
/// Δ = -W^{-1} K, so the discrete operator is self-adjoint in the W inner
/// product. The origin is a reflection (Neumann) boundary on radial grids;
/// R is a homogeneous Dirichlet boundary.
class Grid {
 public:
  GridKind kind() const { return kind_; }
  int dim() const { return N_; }
  double radius() const { return R_; }
  /// Node spacing in the computational coordinate (equals the r spacing on
  /// uniform grids).
  double spacing() const { return h_; }
  double grade() const { return grade_; }
  bool graded() const { return grade_ > 0.0; }
  /// Computational coordinate ξ of a radius r (identity unless graded).
  double computational(double r) const;
  /// Computational coordinate of each node.
  std::span<const double> computational_nodes() const { return xi_; }
  int order() const { return order_; }
  std::size_t size() const { return nodes_.size(); }

  std::span<const double> nodes() const { return nodes_; }
  /// |x| at each node.
  std::span<const double> abs_nodes() const { return abs_nodes_; }
  /// Quadrature weights including the surface factor r^{N-1}|S^{N-1}|.
  std::span<const double> weights() const { return weights_; }
  std::span<const double> staggered_weights() const { return stag_weights_; }
  std::size_t staggered_size() const { return stag_weights_.size(); }

  /// Weights w such that Σ w_k g_k ≈ ∫ |x|^{-α} g(x) dx for smooth g; the
  /// plain weighted rule is corrected near the origin by the zeta-function
  /// terms of the generalized Euler-Maclaurin expansion.
  std::vector<double> singular_weights(double alpha) const;

  /// Coefficients c with Σ c_k v_k ≈ v(0). Radial grids fit an even
  /// polynomial through the first nodes; `kinked` selects a one-sided
  /// linear fit suitable for profiles with a corner at the origin.
  std::vector<std::pair<std::size_t, double>> origin_stencil(bool kinked) const;

  /// Staggered first derivative (Dv)_j in the computational coordinate.
  void derivative(std::span<const cplx> v, std::span<cplx> dv) const;
  /// Stiffness matrix K = D^T W_s D (real symmetric, banded).
  const SymBand<double>& stiffness() const { return stiffness_; }

  /// Laplacian values -W^{-1} K v.
  std::vector<cplx> laplacian(std::span<const cplx> v) const;

  /// Σ_k f_k over nodes in ascending order using the weights given.
  static double weighted_sum(std::span<const double> w, std::span<const double> f);

  friend std::shared_ptr<const Grid> build_grid(GridKind, int, double, std::size_t, int, double);

 private:
  Grid() = default;
  struct Tap {
    long index;
    double coeff;
  };
  // map a possibly out-of-range index to (node, sign); sign 0 means dropped
  std::pair<std::size_t, double> resolve(long idx) const;

  GridKind kind_ = GridKind::radial;
  int N_ = 1;
  double R_ = 0;
  double h_ = 0;
  int order_ = 4;
  double grade_ = 0;
  std::vector<double> nodes_;
  std::vector<double> xi_;
  std::vector<double> abs_nodes_;
  std::vector<double> weights_;
  std::vector<double> stag_weights_;
  std::vector<std::vector<std::pair<std::size_t, double>>> drows_;
  SymBand<double> stiffness_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a grid with M nodes (M >= 64). line1d requires N = 1 and even M.
/// `order` is the finite-difference order of the derivative stencil (2, 4, 6);
/// `grade` > 0 selects a graded radial grid.
GridPtr build_grid(GridKind kind, int N, double R, std::size_t M, int order = 4, double grade = 0.0);

/// Σ w_k f_k (ascending node order). Throws std::domain_error on a non-finite
/// value or result.
double integrate(std::span<const double> f, const Grid& grid);

/// ∫ |x|^{-α} g dx with the origin-corrected singular weights.
double integrate_singular(std::span<const double> g, const Grid& grid, double alpha);

/// Hurwitz zeta ζ(s, 1/2) = (2^s - 1) ζ(s), for real s < 1.
double hurwitz_zeta_half(double s);

}  // namespace nlsi
