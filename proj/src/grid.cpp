#include "nlsi/grid.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <numbers>
#include <stdexcept>

namespace nlsi {

std::string to_string(GridKind kind) { return kind == GridKind::line1d ? "line1d" : "radial"; }

GridKind grid_kind_from_string(const std::string& name) {
  if (name == "line1d") return GridKind::line1d;
  if (name == "radial") return GridKind::radial;
  throw std::invalid_argument("unknown grid kind '" + name + "'");
}

double sphere_area(int N) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

double hurwitz_zeta_half(double s) {
  if (s == 0.0) return 0.0;
  return (std::exp2(s) - 1.0) * std::riemann_zeta(s);
}

namespace {

// staggered-derivative coefficients c_q, q = 1..H:
// v'(x) ≈ (1/h) Σ c_q (v(x + (q-1/2)h) - v(x - (q-1/2)h))
std::vector<double> stagger_coefficients(int order) {
  switch (order) {
    case 2: return {1.0};
    case 4: return {9.0 / 8.0, -1.0 / 24.0};
    case 6: return {75.0 / 64.0, -25.0 / 384.0, 3.0 / 640.0};
    default: throw std::invalid_argument("finite-difference order must be 2, 4 or 6");
  }
}

// Inverse of the fit g(u) ≈ Σ_m a_m u^{e_m} through the abscissae u_k,
// k < n = e.size(): a_m = Σ_k inv[m][k] g_k.
std::vector<std::vector<double>> fit_inverse(const std::vector<double>& e, const std::vector<double>& u) {
  const int n = static_cast<int>(e.size());
  std::vector<std::vector<double>> inv(n, std::vector<double>(n));
  for (int col = 0; col < n; ++col) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1));
    for (int r = 0; r < n; ++r) {
      for (int m = 0; m < n; ++m) a[r][m] = std::pow(u[r], e[m]);
      a[r][n] = r == col ? 1.0 : 0.0;
    }
    for (int c = 0; c < n; ++c) {
      int piv = c;
      for (int r = c + 1; r < n; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      std::swap(a[c], a[piv]);
      for (int r = 0; r < n; ++r) {
        if (r == c) continue;
        const double f = a[r][c] / a[c][c];
        for (int m = c; m <= n; ++m) a[r][m] -= f * a[c][m];
      }
    }
    for (int m = 0; m < n; ++m) inv[m][col] = a[m][n] / a[m][m];
  }
  return inv;
}

std::vector<double> half_lattice(int n) {
  std::vector<double> u(n);
  for (int k = 0; k < n; ++k) u[k] = k + 0.5;
  return u;
}

std::vector<double> even_exponents(int n, int first = 0) {
  std::vector<double> e(n);
  for (int m = 0; m < n; ++m) e[m] = 2.0 * (m + first);
  return e;
}

// expansion exponents of |v|² near the origin for a ground state of the
// inverse-power problem, v ~ a + b ξ^c + d ξ² + ... with cusp exponent c
std::vector<double> cusp_exponents(double c, int n) {
  std::vector<double> e;
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) {
      const double x = 2.0 * i + c * j;
      bool dup = false;
      for (double y : e) dup = dup || std::abs(x - y) < 1e-9;
      if (!dup) e.push_back(x);
    }
  std::sort(e.begin(), e.end());
  e.resize(n);
  return e;
}


// Origin correction of w_k = area h Ω_k for integrands Ω g with Ω = ξ^s J,
// J smooth and even: the fit of J g in the powers e through the first lattice
// points u_k (in units of h) removes the zeta terms of the generalized
// Euler-Maclaurin expansion. The widest fit keeping the weights positive is
// used. `at(k)` maps lattice position k to a weight index.
template <class Index, class Zeta>
bool correct_origin(std::vector<double>& w, const std::vector<double>& omega, double area, double h, double s,
                    const std::vector<double>& exponents, const std::vector<double>& lattice, Index at, Zeta zeta) {
  for (int n = static_cast<int>(std::min(exponents.size(), lattice.size())); n >= 1; --n) {
    const std::vector<double> e(exponents.begin(), exponents.begin() + n);
    const std::vector<double> u(lattice.begin(), lattice.begin() + n);
    const auto inv = fit_inverse(e, u);
    std::vector<double> trial = w;
    bool positive = true;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc += zeta(-s - e[m]) * inv[m][k];
      const std::size_t i = at(k);
      trial[i] -= area * h * omega[i] / std::pow(u[k], s) * acc;
      positive = positive && trial[i] > 0.0;
    }
    if (positive) {
      w = std::move(trial);
      return true;
    }
  }
  return false;
}

double riemann_zeta_reg(double q) { return q == 0.0 ? -0.5 : std::riemann_zeta(q); }

}  // namespace

std::pair<std::size_t, double> Grid::resolve(long idx) const {
  const long M = static_cast<long>(nodes_.size());
  double sign = 1.0;
  if (idx < 0) {
    idx = -idx - 1;
    sign = kind_ == GridKind::radial ? 1.0 : -1.0;
  } else if (idx >= M) {
    idx = 2 * M - 1 - idx;
    sign = -1.0;
  }
  if (idx < 0 || idx >= M) throw std::logic_error("grid stencil wider than grid");
  return {static_cast<std::size_t>(idx), sign};
}

double Grid::computational(double r) const {
  if (grade_ == 0.0) return r;
  return std::sqrt(r * (r + 2.0 * grade_));
}

namespace {

double map_r(double xi, double l) { return l == 0.0 ? xi : xi * xi / (std::sqrt(l * l + xi * xi) + l); }
double map_dr(double xi, double l) { return l == 0.0 ? 1.0 : xi / std::sqrt(l * l + xi * xi); }

}  // namespace

GridPtr build_grid(GridKind kind, int N, double R, std::size_t M, int order, double grade) {
  if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("build_grid: R must be > 0");
  if (M < 64) throw std::invalid_argument("build_grid: need at least 64 nodes");
  if (N < 1) throw std::invalid_argument("build_grid: N must be >= 1");
  if (kind == GridKind::line1d && N != 1) throw std::invalid_argument("build_grid: line1d requires N = 1");
  if (kind == GridKind::line1d && M % 2 != 0) throw std::invalid_argument("build_grid: line1d requires even M");
  if (!(grade >= 0.0) || !std::isfinite(grade)) throw std::invalid_argument("build_grid: grade must be >= 0");
  if (kind == GridKind::line1d && grade != 0.0) throw std::invalid_argument("build_grid: grading applies to radial grids");

  std::shared_ptr<Grid> g(new Grid());
  g->kind_ = kind;
  g->N_ = N;
  g->R_ = R;
  g->order_ = order;
  g->grade_ = grade;
  const auto coeff = stagger_coefficients(order);
  const double area = kind == GridKind::line1d ? 1.0 : sphere_area(N);

  if (kind == GridKind::line1d) {
    g->h_ = 2.0 * R / static_cast<double>(M);
    g->nodes_.resize(M);
    g->abs_nodes_.resize(M);
    g->weights_.assign(M, g->h_);
    for (std::size_t j = 0; j < M; ++j) {
      // symmetric construction: x_{M-1-j} = -x_j exactly
      const double a = (static_cast<double>(j) - 0.5 * static_cast<double>(M) + 0.5) * g->h_;
      g->nodes_[j] = a;
      g->abs_nodes_[j] = std::abs(a);
    }
    g->xi_ = g->nodes_;
    g->stag_weights_.assign(M + 1, g->h_);
    g->stag_weights_.front() *= 0.5;
    g->stag_weights_.back() *= 0.5;
  } else {
    const double l = grade;
    const double Xi = g->computational(R);
    const double h = Xi / static_cast<double>(M);
    g->h_ = h;
    g->nodes_.resize(M);
    g->xi_.resize(M);
    std::vector<double> omega(M);
    for (std::size_t k = 0; k < M; ++k) {
      const double xi = (static_cast<double>(k) + 0.5) * h;
      const double r = map_r(xi, l);
      g->xi_[k] = xi;
      g->nodes_[k] = r;
      omega[k] = std::pow(r, N - 1) * map_dr(xi, l);
    }
    g->abs_nodes_ = g->nodes_;
    g->weights_.resize(M);
    for (std::size_t k = 0; k < M; ++k) g->weights_[k] = area * h * omega[k];
    const double s_nodes = l > 0.0 ? 2.0 * N - 1.0 : N - 1.0;
    if (l > 0.0 && !correct_origin(g->weights_, omega, area, h, s_nodes, even_exponents(4), half_lattice(4),
                        [](int k) { return static_cast<std::size_t>(k); }, hurwitz_zeta_half))
      throw std::domain_error("build_grid: no positive origin quadrature");

    // staggered points ξ = jh; the derivative vanishes at j = 0 by symmetry
    std::vector<double> somega(M + 1);
    for (std::size_t j = 1; j <= M; ++j) {
      const double xi = static_cast<double>(j) * h;
      somega[j] = std::pow(map_r(xi, l), N - 1) / map_dr(xi, l);
    }
    somega[0] = (l == 0.0 && N == 1) ? 1.0 : 0.0;
    g->stag_weights_.resize(M + 1);
    for (std::size_t j = 0; j <= M; ++j) g->stag_weights_[j] = area * h * somega[j];
    g->stag_weights_.front() *= 0.5;
    g->stag_weights_.back() *= 0.5;
    const double s_stag = l > 0.0 ? 2.0 * N - 3.0 : N - 1.0;
    if (l > 0.0 && !correct_origin(g->stag_weights_, somega, area, h, s_stag, even_exponents(4, 1), {1.0, 2.0, 3.0, 4.0},
                        [](int k) { return static_cast<std::size_t>(k + 1); }, riemann_zeta_reg))
      throw std::domain_error("build_grid: no positive staggered quadrature");
  }

  // derivative rows with reflections folded in
  const long H = static_cast<long>(coeff.size());
  const std::size_t S = M + 1;
  g->drows_.resize(S);
  for (std::size_t j = 0; j < S; ++j) {
    std::map<std::size_t, double> row;
    for (long q = 1; q <= H; ++q) {
      const double c = coeff[q - 1] / g->h_;
      auto [ip, sp] = g->resolve(static_cast<long>(j) + q - 1);
      auto [im, sm] = g->resolve(static_cast<long>(j) - q);
      row[ip] += c * sp;
      row[im] -= c * sm;
    }
    for (auto [idx, c] : row)
      if (c != 0.0) g->drows_[j].emplace_back(idx, c);
  }

  const std::size_t bw = static_cast<std::size_t>(2 * H - 1);
  g->stiffness_ = SymBand<double>(M, bw);
  for (std::size_t j = 0; j < S; ++j) {
    const double w = g->stag_weights_[j];
    if (w == 0.0) continue;
    const auto& row = g->drows_[j];
    for (std::size_t a = 0; a < row.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        const auto [ia, ca] = row[a];
        const auto [ib, cb] = row[b];
        const std::size_t hi = std::max(ia, ib), lo = std::min(ia, ib);
        g->stiffness_.at(hi, lo) += w * ca * cb;
      }
  }
  return g;
}

std::vector<double> Grid::singular_weights(double alpha) const {
  const std::size_t M = nodes_.size();
  const bool mapped = grade_ > 0.0;
  const double s = kind_ == GridKind::line1d ? -alpha : (mapped ? 2.0 * N_ - 1.0 - 2.0 * alpha : N_ - 1.0 - alpha);
  if (!(s > -1.0)) throw std::domain_error("singular_weights: |x|^{-alpha} not integrable on this grid");
  const double area = kind_ == GridKind::line1d ? 1.0 : sphere_area(N_);
  std::vector<double> omega(M);
  for (std::size_t k = 0; k < M; ++k)
    omega[k] = kind_ == GridKind::line1d ? std::pow(abs_nodes_[k], -alpha)
                                         : std::pow(nodes_[k], N_ - 1.0 - alpha) * map_dr(xi_[k], grade_);
  std::vector<double> w(M);
  for (std::size_t k = 0; k < M; ++k) w[k] = area * h_ * omega[k];
  const auto e = cusp_exponents((2.0 - alpha) * (mapped ? 2.0 : 1.0), 4);
  bool ok;
  if (kind_ == GridKind::radial) {
    ok = correct_origin(w, omega, area, h_, s, e, half_lattice(4), [](int k) { return static_cast<std::size_t>(k); },
                        hurwitz_zeta_half);
  } else {
    // both half-lines carry the same correction
    const std::size_t half = M / 2;
    std::vector<double> right = w;
    ok = correct_origin(right, omega, area, h_, s, e, half_lattice(4),
                        [half](int k) { return half + static_cast<std::size_t>(k); }, hurwitz_zeta_half);
    for (std::size_t k = half; k < M; ++k) {
      w[k] = right[k];
      w[M - 1 - k] = right[k];
    }
  }
  if (!ok) throw std::domain_error("singular_weights: no positive origin correction");
  for (double x : w)
    if (!std::isfinite(x) || !(x > 0.0)) throw std::domain_error("singular_weights: non-finite or non-positive weight");
  return w;
}

std::vector<std::pair<std::size_t, double>> Grid::origin_stencil(bool kinked) const {
  std::vector<double> c;
  if (kinked && grade_ == 0.0) {
    c = {1.5, -0.5};
  } else {
    // graded grids turn a kink at the origin into an even function of ξ
    const auto inv = fit_inverse(even_exponents(4), half_lattice(4));
    c = inv[0];
  }
  std::vector<std::pair<std::size_t, double>> out;
  if (kind_ == GridKind::radial) {
    for (std::size_t k = 0; k < c.size(); ++k) out.emplace_back(k, c[k]);
  } else {
    const std::size_t half = nodes_.size() / 2;
    for (std::size_t k = 0; k < c.size(); ++k) {
      out.emplace_back(half - 1 - k, 0.5 * c[k]);
      out.emplace_back(half + k, 0.5 * c[k]);
    }
  }
  return out;
}

void Grid::derivative(std::span<const cplx> v, std::span<cplx> dv) const {
  for (std::size_t j = 0; j < drows_.size(); ++j) {
    cplx acc{};
    for (auto [idx, c] : drows_[j]) acc += c * v[idx];
    dv[j] = acc;
  }
}

std::vector<cplx> Grid::laplacian(std::span<const cplx> v) const {
  std::vector<cplx> out(v.size());
  stiffness_.multiply<cplx>(v, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = -out[k] / weights_[k];
  return out;
}

double Grid::weighted_sum(std::span<const double> w, std::span<const double> f) {
  if (w.size() != f.size()) throw std::invalid_argument("integrate: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += w[k] * f[k];
  if (!std::isfinite(acc)) throw std::domain_error("integrate: non-finite quadrature result");
  return acc;
}

double integrate(std::span<const double> f, const Grid& grid) {
  return Grid::weighted_sum(grid.weights(), f);
}

double integrate_singular(std::span<const double> g, const Grid& grid, double alpha) {
  const auto w = grid.singular_weights(alpha);
  return Grid::weighted_sum(w, g);
}

}  // namespace nlsi
