#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nlsi/grid.hpp"

using namespace nlsi;

namespace {

// Composite Gauss-Legendre on [a, b] with n panels (5 points each), an
// oracle independent of the grid rules.
template <class F>
double gauss_legendre(F f, double a, double b, int panels) {
  static const double x[5] = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640, -0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  double acc = 0.0;
  const double hp = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double c = a + (i + 0.5) * hp;
    for (int k = 0; k < 5; ++k) acc += 0.5 * hp * w[k] * f(c + 0.5 * hp * x[k]);
  }
  return acc;
}

std::vector<double> sample(const Grid& g, auto f) {
  std::vector<double> out(g.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(g.nodes()[k]);
  return out;
}

}  // namespace

TEST_CASE("line1d construction places nodes at half offsets") {
  auto g = build_grid(GridKind::line1d, 1, 20.0, 1024);
  CHECK(g->spacing() == doctest::Approx(40.0 / 1024).epsilon(1e-15));
  CHECK(g->nodes()[512] == doctest::Approx(0.5 * g->spacing()).epsilon(1e-14));
  CHECK(g->nodes()[511] == doctest::Approx(-0.5 * g->spacing()).epsilon(1e-14));
  for (std::size_t j = 0; j < 1024; ++j) CHECK(g->nodes()[j] == -g->nodes()[1023 - j]);
  for (double w : g->weights()) CHECK(w > 0.0);
}

TEST_CASE("grid construction rejects bad input") {
  CHECK_THROWS_AS(build_grid(GridKind::radial, 3, 10.0, 32), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(GridKind::line1d, 2, 10.0, 128), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(GridKind::radial, 1, -1.0, 128), std::invalid_argument);
  auto g = build_grid(GridKind::radial, 1, 10.0, 128);
  CHECK_THROWS_AS(g->singular_weights(1.0), std::domain_error);
}

TEST_CASE("ball volume and Gaussian integral on radial grids") {
  auto g = build_grid(GridKind::radial, 3, 10.0, 4096);
  std::vector<double> one(g->size(), 1.0);
  const double vol = 4.0 * std::numbers::pi * 1000.0 / 3.0;
  CHECK(std::abs(integrate(one, *g) - vol) / vol <= 1e-6);

  auto g12 = build_grid(GridKind::radial, 3, 12.0, 4096);
  auto f = sample(*g12, [](double r) { return std::exp(-r * r); });
  CHECK(integrate(f, *g12) == doctest::Approx(std::pow(std::numbers::pi, 1.5)).epsilon(1e-12));

  for (double w : g->weights()) CHECK(w > 0.0);
}

TEST_CASE("integrate: zero, linearity and non-finite input") {
  auto g = build_grid(GridKind::line1d, 1, 10.0, 256);
  std::vector<double> z(g->size(), 0.0);
  CHECK(integrate(z, *g) == 0.0);
  auto f = sample(*g, [](double x) { return std::exp(-x * x) * std::cos(x); });
  auto h = sample(*g, [](double x) { return 1.0 / (1.0 + x * x); });
  std::vector<double> c(g->size());
  const double a = 1.7, b = -0.3;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = a * f[k] + b * h[k];
  const double lhs = integrate(c, *g), rhs = a * integrate(f, *g) + b * integrate(h, *g);
  CHECK(std::abs(lhs - rhs) <= 1e-13 * std::abs(rhs));
  f[7] = std::nan("");
  CHECK_THROWS_AS(integrate(f, *g), std::domain_error);
}

TEST_CASE("singular quadrature of |x|^{-1/2} e^{-2x^2}") {
  const double exact = std::pow(2.0, -0.25) * std::tgamma(0.25);
  // independent oracle: substitution x = t^2 removes the singularity
  const double oracle = 2.0 * gauss_legendre([](double t) { return 2.0 * std::exp(-2.0 * t * t * t * t); }, 0.0, 4.0, 400);
  CHECK(oracle == doctest::Approx(exact).epsilon(1e-12));
  CHECK(exact == doctest::Approx(3.0488).epsilon(1e-4));

  for (auto kind : {GridKind::line1d, GridKind::radial}) {
    auto g = build_grid(kind, 1, 20.0, 4096);
    auto gfun = sample(*g, [](double x) { return std::exp(-2.0 * x * x); });
    CHECK(std::abs(integrate_singular(gfun, *g, 0.5) - exact) / exact <= 1e-4);
  }
}

TEST_CASE("singular quadrature converges at least at rate 2 - alpha - 0.2") {
  for (double alpha : {0.3, 0.5, 0.8}) {
    // exact: ∫_R |x|^{-α} e^{-2x²} = Γ((1-α)/2) 2^{-(1-α)/2}
    const double exact = std::tgamma(0.5 * (1.0 - alpha)) * std::pow(2.0, -0.5 * (1.0 - alpha));
    double prev = 0.0;
    for (std::size_t M : {64u, 128u, 256u}) {
      auto g = build_grid(GridKind::radial, 1, 8.0, M);
      auto gfun = sample(*g, [](double x) { return std::exp(-2.0 * x * x); });
      const double err = std::abs(integrate_singular(gfun, *g, alpha) - exact);
      CHECK(std::isfinite(err));
      if (prev > 0.0 && err > 1e-14) CHECK(prev / err >= std::pow(2.0, 2.0 - alpha - 0.2));
      prev = err;
    }
  }
}

TEST_CASE("singular weights in higher dimensions") {
  // ∫_{R^3} |x|^{-1} e^{-r^2} = 4π ∫ r e^{-r^2} = 2π
  auto g = build_grid(GridKind::radial, 3, 10.0, 2048);
  auto f = sample(*g, [](double r) { return std::exp(-r * r); });
  CHECK(integrate_singular(f, *g, 1.0) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-9));
  // N = 2, α = 1.5: 2π ∫ r^{-1/2} e^{-r^2} dr = π Γ(1/4)
  auto g2 = build_grid(GridKind::radial, 2, 10.0, 2048);
  auto f2 = sample(*g2, [](double r) { return std::exp(-r * r); });
  CHECK(integrate_singular(f2, *g2, 1.5) == doctest::Approx(std::numbers::pi * std::tgamma(0.25)).epsilon(1e-6));
}

TEST_CASE("Laplacian of a constant vanishes away from the boundary") {
  auto g = build_grid(GridKind::radial, 3, 10.0, 512);
  std::vector<cplx> one(g->size(), 1.0);
  auto lap = g->laplacian(one);
  for (std::size_t k = 0; k + 10 < g->size(); ++k) CHECK(std::abs(lap[k]) < 1e-8);
}

TEST_CASE("radial Laplacian of a Gaussian in two dimensions is second order") {
  double prev = 0.0;
  for (std::size_t M : {256u, 512u, 1024u}) {
    auto g = build_grid(GridKind::radial, 2, 8.0, M);
    std::vector<cplx> v(g->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::exp(-g->nodes()[k] * g->nodes()[k]);
    auto lap = g->laplacian(v);
    double err = 0.0;
    // the first node couples to the |r| kink of the even extension when N is even
    for (std::size_t k = 1; k < v.size() * 3 / 4; ++k) {
      const double r = g->nodes()[k];
      err = std::max(err, std::abs(lap[k].real() - (4 * r * r - 4) * std::exp(-r * r)));
    }
    const double h = g->spacing();
    CHECK(err <= 10.0 * h * h);
    if (prev > 0) CHECK(prev / err > 3.5);
    prev = err;
  }
}

TEST_CASE("line1d stencil reproduces -k^2 sin(kx)") {
  const double k = 2.0 * std::numbers::pi * 3.0 / 20.0;  // vanishes at x = ±10
  double prev = 0.0;
  for (std::size_t M : {256u, 512u}) {
    auto g = build_grid(GridKind::line1d, 1, 10.0, M);
    std::vector<cplx> v(g->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::sin(k * g->nodes()[j]);
    auto lap = g->laplacian(v);
    double err = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) err = std::max(err, std::abs(lap[j].real() + k * k * v[j].real()));
    CHECK(err <= k * k * g->spacing() * g->spacing());
    if (prev > 0) CHECK(prev / err > 3.5);
    prev = err;
  }
}

TEST_CASE("stiffness is consistent with the Dirichlet form") {
  auto g = build_grid(GridKind::radial, 3, 6.0, 256);
  std::vector<cplx> v(g->size()), kv(g->size()), dv(g->staggered_size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = cplx(std::exp(-g->nodes()[k]), 0.3 * std::sin(g->nodes()[k]));
  g->stiffness().multiply<cplx>(v, kv);
  g->derivative(v, dv);
  cplx form{};
  for (std::size_t k = 0; k < v.size(); ++k) form += std::conj(v[k]) * kv[k];
  double direct = 0.0;
  for (std::size_t j = 0; j < dv.size(); ++j) direct += g->staggered_weights()[j] * std::norm(dv[j]);
  CHECK(form.real() == doctest::Approx(direct).epsilon(1e-12));
  CHECK(std::abs(form.imag()) < 1e-10 * direct);
}

TEST_CASE("hurwitz zeta at one half") {
  CHECK(hurwitz_zeta_half(-1.0) == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
  CHECK(hurwitz_zeta_half(-2.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(hurwitz_zeta_half(0.0) == 0.0);
  // ζ(1/2, 1/2) = (√2 - 1) ζ(1/2)
  CHECK(hurwitz_zeta_half(0.5) == doctest::Approx((std::sqrt(2.0) - 1.0) * -1.4603545088095868).epsilon(1e-12));
}

TEST_CASE("graded radial grid keeps the nodes off the origin and integrates to high order") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 512, 4, 2.0);
  CHECK(g->graded());
  CHECK(g->nodes()[0] > 0.0);
  CHECK(g->nodes()[511] < 16.0);
  CHECK(g->computational(g->nodes()[100]) == doctest::Approx(g->computational_nodes()[100]).epsilon(1e-13));
  for (double w : g->weights()) CHECK(w > 0.0);
  for (double w : g->staggered_weights()) CHECK(w >= 0.0);
  // kinked integrand: exp(-|x|) over the line
  const double e1 = integrate(sample(*g, [](double r) { return std::exp(-r); }), *g);
  CHECK(e1 == doctest::Approx(2.0 * (1.0 - std::exp(-16.0))).epsilon(1e-9));
  const double e2 = integrate(sample(*g, [](double r) { return std::exp(-r * r); }), *g);
  CHECK(e2 == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("graded grids in three dimensions") {
  auto g = build_grid(GridKind::radial, 3, 40.0, 2048, 4, 1.0);
  const double vol = integrate(std::vector<double>(g->size(), 1.0), *g);
  CHECK(vol == doctest::Approx(4.0 / 3.0 * std::numbers::pi * 64000.0).epsilon(1e-6));
  // hydrogenic density e^{-r}: ∫ = 8π; singular ∫ e^{-r}/r = 4π
  const auto f = sample(*g, [](double r) { return std::exp(-r); });
  CHECK(integrate(f, *g) == doctest::Approx(8.0 * std::numbers::pi).epsilon(1e-8));
  CHECK(integrate_singular(f, *g, 1.0) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-8));
}

TEST_CASE("singular integral of a cusped profile converges fast on graded grids") {
  // g = (1 + r^{3/2})² e^{-2r²}, α = 1/2, N = 1
  auto gfun = [](double r) { return std::pow((1.0 + std::pow(r, 1.5)) * std::exp(-r * r), 2.0); };
  const double ref = 2.0 * (gauss_legendre([&](double t) { return 2.0 * gfun(t * t); }, 0.0, 1.0, 400) +
                            gauss_legendre([&](double r) { return gfun(r) / std::sqrt(r); }, 1.0, 8.0, 400));
  double prev = 0.0;
  for (std::size_t M : {256u, 512u, 1024u}) {
    auto g = build_grid(GridKind::radial, 1, 8.0, M, 4, 1.0);
    const double err = std::abs(integrate_singular(sample(*g, gfun), *g, 0.5) - ref);
    CHECK(err < 1e-6);
    if (prev > 1e-13) CHECK(prev / err > 6.0);
    prev = err;
  }
}

TEST_CASE("graded Laplacian of a Gaussian away from the origin") {
  for (std::size_t M : {512u, 1024u}) {
    auto g = build_grid(GridKind::radial, 1, 10.0, M, 4, 1.0);
    std::vector<cplx> v(g->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::exp(-g->nodes()[k] * g->nodes()[k]);
    const auto lap = g->laplacian(v);
    double err = 0.0;
    for (std::size_t k = 8; k < v.size(); ++k) {
      const double r = g->nodes()[k];
      err = std::max(err, std::abs(lap[k].real() - (4.0 * r * r - 2.0) * std::exp(-r * r)));
    }
    CHECK(err < 1e-5);
  }
}
