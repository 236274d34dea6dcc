#pragma once

#include <string>

namespace nlsi {

enum class PotentialKind { inverse_power, delta };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

/// Model parameters of i u_t = -Δu - γ|x|^{-α} u - |u|^{p-1} u.
///
/// For the delta potential (N = 1 only) the potential term is γ δ(x) and α is
/// fixed to 1, the dilation degree of G(v) = γ|v(0)|².
struct ModelParams {
  int N = 1;
  double gamma = 0.0;
  double alpha = 0.5;
  double p = 7.0;
  double omega = 1.0;
  PotentialKind kind = PotentialKind::inverse_power;

  /// Dilation degree of the nonlinear term, N(p-1)/2.
  double beta() const { return 0.5 * N * (p - 1.0); }

  /// Throws std::invalid_argument unless the parameter tuple is admissible.
  /// gamma = 0 is accepted as the potential-free reference problem.
  void validate() const;

  ModelParams with_gamma(double g) const {
    ModelParams q = *this;
    q.gamma = g;
    return q;
  }
  ModelParams with_omega(double w) const {
    ModelParams q = *this;
    q.omega = w;
    return q;
  }
};

}  // namespace nlsi
