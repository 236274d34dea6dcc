#include "nlsi/profile.hpp"

#include <cmath>
#include <stdexcept>

namespace nlsi {

double analytic_value(const AnalyticTag& tag, double r) {
  if (const auto* g = std::get_if<GaussianTag>(&tag)) {
    const double z = r / g->width;
    return g->amplitude * std::exp(-z * z);
  }
  if (const auto* s = std::get_if<SechPowerTag>(&tag)) {
    return s->amplitude * std::pow(1.0 / std::cosh(s->scale * r), s->exponent);
  }
  throw std::logic_error("analytic_value: untagged profile");
}

Profile::Profile(GridPtr grid, std::vector<cplx> values, AnalyticTag tag)
    : grid_(std::move(grid)), values_(std::move(values)), tag_(tag) {
  if (!grid_) throw std::invalid_argument("Profile: null grid");
  if (values_.size() != grid_->size()) throw std::invalid_argument("Profile: value count differs from grid size");
}

Profile Profile::zero(GridPtr grid) {
  const std::size_t n = grid->size();
  return Profile(std::move(grid), std::vector<cplx>(n));
}

Profile Profile::sample(GridPtr grid, const AnalyticTag& tag) {
  std::vector<cplx> v(grid->size());
  const auto r = grid->abs_nodes();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = analytic_value(tag, r[k]);
  return Profile(std::move(grid), std::move(v), tag);
}

Profile Profile::from_real(GridPtr grid, std::span<const double> values) {
  std::vector<cplx> v(values.begin(), values.end());
  return Profile(std::move(grid), std::move(v));
}

std::vector<double> Profile::density() const {
  std::vector<double> d(values_.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = std::norm(values_[k]);
  return d;
}

bool Profile::is_zero() const {
  for (const auto& z : values_)
    if (z != cplx{}) return false;
  return true;
}

Profile amplitude_scale(const Profile& v, double mu) {
  std::vector<cplx> w(v.values().begin(), v.values().end());
  for (auto& z : w) z *= mu;
  AnalyticTag tag = v.tag();
  if (auto* g = std::get_if<GaussianTag>(&tag)) g->amplitude *= mu;
  if (auto* s = std::get_if<SechPowerTag>(&tag)) s->amplitude *= mu;
  return Profile(v.grid_ptr(), std::move(w), tag);
}

Profile combine(double a, const Profile& u, double b, const Profile& v) {
  if (u.grid_ptr() != v.grid_ptr()) throw std::invalid_argument("combine: profiles on different grids");
  std::vector<cplx> w(u.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = a * u.values()[k] + b * v.values()[k];
  return Profile(u.grid_ptr(), std::move(w));
}

cplx interpolate(const Profile& v, double x) {
  const Grid& g = v.grid();
  const long M = static_cast<long>(g.size());
  const double h = g.spacing();
  double pos;  // fractional index
  if (g.kind() == GridKind::radial) {
    pos = g.computational(std::abs(x)) / h - 0.5;
  } else {
    pos = (x + g.radius()) / h - 0.5;
  }
  // beyond the Dirichlet boundary the field is zero
  if (pos <= -1.0 && g.kind() == GridKind::line1d) return {};
  if (pos >= static_cast<double>(M)) return {};
  const long k = static_cast<long>(std::floor(pos));
  const double t = pos - static_cast<double>(k);
  auto node = [&](long idx) -> cplx {
    double sign = 1.0;
    if (idx < 0) {
      idx = -idx - 1;
      sign = g.kind() == GridKind::radial ? 1.0 : -1.0;
    } else if (idx >= M) {
      idx = 2 * M - 1 - idx;
      sign = -1.0;
    }
    return sign * v.values()[static_cast<std::size_t>(idx)];
  };
  // nodes k-1, k, k+1, k+2 at offsets -1, 0, 1, 2
  const double l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return l0 * node(k - 1) + l1 * node(k) + l2 * node(k + 1) + l3 * node(k + 2);
}

}  // namespace nlsi
