#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "nlsi/grid.hpp"

namespace nlsi {

/// A exp(-|x|²/width²).
struct GaussianTag {
  double width = 1.0;
  double amplitude = 1.0;
};

/// A sech(scale |x|)^exponent. The γ = 0 soliton in one dimension is
/// sech_power{(p-1)√ω/2, ((p+1)ω/2)^{1/(p-1)}, 2/(p-1)}.
struct SechPowerTag {
  double scale = 1.0;
  double amplitude = 1.0;
  double exponent = 1.0;
};

using AnalyticTag = std::variant<std::monostate, GaussianTag, SechPowerTag>;

/// Closed-form value of a tagged profile at distance r from the origin.
double analytic_value(const AnalyticTag& tag, double r);

/// Complex field sampled on a grid, optionally carrying the closed form it
/// was sampled from. Immutable value type.
class Profile {
 public:
  Profile() = default;
  Profile(GridPtr grid, std::vector<cplx> values, AnalyticTag tag = {});

  static Profile zero(GridPtr grid);
  static Profile sample(GridPtr grid, const AnalyticTag& tag);
  static Profile from_real(GridPtr grid, std::span<const double> values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  const AnalyticTag& tag() const { return tag_; }
  bool tagged() const { return !std::holds_alternative<std::monostate>(tag_); }
  std::size_t size() const { return values_.size(); }

  /// Same samples without the closed form, forcing grid quadrature.
  Profile untagged() const { return Profile(grid_, values_); }

  /// |v|² at each node.
  std::vector<double> density() const;
  bool is_zero() const;

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
  AnalyticTag tag_;
};

/// Amplitude scaling μ v (the Nehari direction). Distinct from the dilation
/// v^λ provided by `scale` in functionals.hpp.
Profile amplitude_scale(const Profile& v, double mu);

/// Pointwise linear combination a u + b v on a common grid (tag dropped).
Profile combine(double a, const Profile& u, double b, const Profile& v);

/// Cubic Lagrange interpolation of the node values at |x| = r (radial) or at
/// position x (line1d), honouring the reflection at the origin and the
/// homogeneous Dirichlet condition at R.
cplx interpolate(const Profile& v, double x);

}  // namespace nlsi
