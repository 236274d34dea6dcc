#include "nlsi/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlsi {

std::string to_string(PotentialKind kind) {
  return kind == PotentialKind::delta ? "delta" : "inverse_power";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "inverse_power") return PotentialKind::inverse_power;
  if (name == "delta") return PotentialKind::delta;
  throw std::invalid_argument("unknown potential kind '" + name + "'");
}

void ModelParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("ModelParams: " + what); };
  if (N < 1) fail("dimension N must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma must be finite and >= 0");
  if (!std::isfinite(omega)) fail("omega must be finite");
  const double p_low = 1.0 + 4.0 / N;
  const double p_high = N <= 2 ? std::numeric_limits<double>::infinity() : 1.0 + 4.0 / (N - 2);
  if (!(p > p_low && p < p_high)) fail("p must satisfy 1 + 4/N < p < 1 + 4/(N-2)");
  if (kind == PotentialKind::delta) {
    if (N != 1) fail("delta potential requires N = 1");
    if (alpha != 1.0) fail("delta potential fixes alpha = 1");
  } else {
    if (!(alpha > 0.0 && alpha < std::min(2.0, static_cast<double>(N))))
      fail("alpha must satisfy 0 < alpha < min{2, N}");
  }
}

}  // namespace nlsi
