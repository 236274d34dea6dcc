#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "nlsi/ground_state.hpp"

using namespace nlsi;

namespace {

ModelParams model(double gamma, double omega, double alpha = 0.5) {
  ModelParams p;
  p.N = 1;
  p.gamma = gamma;
  p.alpha = alpha;
  p.p = 7.0;
  p.omega = omega;
  return p;
}

ModelParams delta_model(double gamma, double omega) {
  ModelParams p = model(gamma, omega, 1.0);
  p.kind = PotentialKind::delta;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("omega0 without potential is zero") {
  auto g = build_grid(GridKind::radial, 1, 20.0, 512);
  const auto s = estimate_omega0(model(0.0, 1.0), g);
  CHECK(s.omega0 == 0.0);
  CHECK(s.box_limited);
  CHECK(s.lambda_min > 0.0);
  CHECK(s.lambda_min < 0.01);
  CHECK(s.converged);
}

TEST_CASE("hydrogenic threshold") {
  ModelParams p;
  p.N = 3;
  p.gamma = 1.0;
  p.alpha = 1.0;
  p.p = 3.0;
  p.omega = 1.0;
  auto g = build_grid(GridKind::radial, 3, 40.0, 2048, 4, 1.0);
  const auto s = estimate_omega0(p, g);
  CHECK(s.converged);
  CHECK(s.omega0 == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(std::abs(s.rayleigh + s.omega0) <= 1e-8);
  // the minimizer is e^{-r/2}
  const auto v = s.rayleigh_minimizer.values();
  const auto r = g->nodes();
  CHECK(std::abs(v[600].real() / v[200].real() - std::exp(-(r[600] - r[200]) / 2)) < 1e-6);
}

TEST_CASE("omega0 is monotone in gamma and matches the delta threshold") {
  auto g = build_grid(GridKind::radial, 1, 30.0, 1024, 4, 1.0);
  double prev = 0.0;
  for (double gamma : {0.25, 0.5, 1.0, 2.0}) {
    const double w0 = estimate_omega0(model(gamma, 10.0), g).omega0;
    CHECK(w0 >= prev);
    prev = w0;
  }
  for (double gamma : {0.5, 1.0}) {
    const auto s = estimate_omega0(delta_model(gamma, 1.0), g);
    CHECK(s.omega0 == doctest::Approx(gamma * gamma / 4).epsilon(1e-6));
  }
}

TEST_CASE("shooting oracle") {
  auto g = build_grid(GridKind::radial, 1, 40.0, 6144, 6);
  const auto sol = reference_soliton_gamma0(1.0, 7.0, g);
  CHECK(sol.phi0 == doctest::Approx(std::pow(4.0, 1.0 / 6.0)).epsilon(1e-12));
  CHECK(residual_stationary(sol.profile, model(0.0, 1.0)) <= 1e-10);
  CHECK(sol.S > 0.0);
  CHECK(sol.mass > 0.0);

  SUBCASE("frequency scaling") {
    const double w = 4.0;
    const auto s4 = reference_soliton_gamma0(w, 7.0, g);
    const double e = 1.0 / 6.0;
    CHECK(s4.phi0 == doctest::Approx(std::pow(w, e) * sol.phi0).epsilon(1e-12));
    // φ_ω(x) = ω^{1/(p-1)} φ_1(√ω x): S scales as ω^{2/(p-1) + 1/2}
    CHECK(s4.S == doctest::Approx(std::pow(w, 2 * e + 0.5) * sol.S).epsilon(1e-10));
    for (std::size_t k = 100; k < 2000; k += 97) {
      const double x = g->nodes()[k];
      const double ref = std::pow(w, e) * interpolate(sol.profile, std::sqrt(w) * x).real();
      CHECK(std::abs(s4.profile.values()[k].real() - ref) < 1e-8);
    }
  }
  SUBCASE("delta soliton: closed-form amplitude") {
    const double gamma = 1.0, w = 4.0;
    const auto sd = shoot_soliton(w, 7.0, gamma, g);
    CHECK(sd.phi0 == doctest::Approx(std::pow(8.0 * (w / 2 - gamma * gamma / 8), 1.0 / 6.0)).epsilon(1e-12));
  }
}

TEST_CASE("ground state at gamma = 0 reproduces the oracle") {
  for (double w : {1.0, 4.0}) {
    auto g = build_grid(GridKind::radial, 1, 32.0 / std::sqrt(w), 4096);
    const auto p = model(0.0, w);
    const auto oracle = reference_soliton_gamma0(w, 7.0, g);
    const auto a = solve_ground_state(p, g, default_initial_guess(g, w), GroundStateMethod::gradient_flow);
    const auto b = solve_ground_state(p, g, default_initial_guess(g, w), GroundStateMethod::nehari_descent);
    CHECK(a.residual <= 1e-8);
    CHECK(b.residual <= 1e-8);
    CHECK(rel(a.report.S, oracle.S) < 1e-6);
    CHECK(rel(b.report.S, a.report.S) < 1e-6);
    CHECK(std::abs(a.report.K) <= 1e-8 * a.report.L_omega);
    CHECK(std::abs(a.report.Q) <= 1e-8 * a.report.grad2);
    double diff = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k)
      diff = std::max(diff, std::abs(a.profile.values()[k].real() - oracle.profile.values()[k].real()));
    CHECK(diff < 1e-6);
    const auto d = compute_d(a);
    CHECK(d.d1 > 0.0);
    CHECK(d.max_relative_gap < 1e-8);
  }
}

TEST_CASE("ground states with the inverse-power potential") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 1536, 4, 2.0);
  const double d0 = reference_soliton_gamma0(4.0, 7.0, g).S;
  double prev = d0;
  for (double gamma : {0.25, 0.5, 1.0}) {
    const auto p = model(gamma, 4.0);
    const auto a = solve_ground_state(p, g, default_initial_guess(g, 4.0), GroundStateMethod::gradient_flow);
    const auto b = solve_ground_state(p, g, default_initial_guess(g, 4.0), GroundStateMethod::nehari_descent);
    CHECK(a.residual <= 1e-8);
    CHECK(rel(a.report.S, b.report.S) < 1e-6);
    CHECK(std::abs(a.report.K) <= 1e-8 * a.report.L_omega);
    CHECK(std::abs(a.report.Q) <= 1e-8 * a.report.grad2);
    CHECK(a.d_omega > 0.0);
    CHECK(a.d_omega < prev);
    prev = a.d_omega;
    CHECK(compute_d(a).max_relative_gap < 1e-8);
    // positive radial profile
    for (auto x : a.profile.values()) CHECK(x.real() >= 0.0);
  }
}

TEST_CASE("delta ground state") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 1536, 4, 2.0);
  const double gamma = 1.0, w = 4.0;
  const auto a = solve_ground_state(delta_model(gamma, w), g, default_initial_guess(g, w), GroundStateMethod::gradient_flow);
  const auto oracle = shoot_soliton(w, 7.0, gamma, g);
  CHECK(rel(a.report.S, oracle.S) < 1e-8);
  CHECK(std::abs(a.report.Q) <= 1e-8 * a.report.grad2);
  CHECK(a.report.S < reference_soliton_gamma0(w, 7.0, g).S);
}

TEST_CASE("solver preconditions and failures") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 512, 4, 1.0);
  const auto p = model(1.0, 1.0);
  const double w0 = estimate_omega0(p, g).omega0;
  CHECK_THROWS_AS(solve_ground_state(p.with_omega(w0), g, default_initial_guess(g, 1.0), GroundStateMethod::gradient_flow),
                  NotAdmissible);
  CHECK_THROWS_AS(solve_ground_state(p.with_omega(w0 + 1), g, Profile::zero(g), GroundStateMethod::gradient_flow),
                  std::invalid_argument);
  auto other = build_grid(GridKind::radial, 1, 16.0, 256);
  CHECK_THROWS_AS(
      solve_ground_state(p.with_omega(w0 + 1), g, default_initial_guess(other, 1.0), GroundStateMethod::gradient_flow),
      std::invalid_argument);
  SolverOptions tight;
  tight.max_iterations = 2;
  CHECK_THROWS_AS(
      solve_ground_state(p.with_omega(w0 + 1), g, default_initial_guess(g, 1.0), GroundStateMethod::gradient_flow, tight),
      SolverError);
}

TEST_CASE("residual decreases along the solver") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 1024, 4, 2.0);
  const auto p = model(0.5, 4.0);
  const Profile init = default_initial_guess(g, 4.0);
  double prev = residual_stationary(init, p);
  CHECK(prev > 1e-2);
  for (int n : {2, 4, 8}) {
    SolverOptions o;
    o.max_iterations = n;
    o.acceptable = 1.0;
    const double r = solve_ground_state(p, g, init, GroundStateMethod::gradient_flow, o).residual;
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("levels away from the Nehari manifold") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 1024, 4, 2.0);
  const auto p = model(0.5, 4.0);
  const auto gs = solve_ground_state(p, g, default_initial_guess(g, 4.0), GroundStateMethod::gradient_flow);
  const DiscreteModel m(g, p);
  const auto r = m.report(amplitude_scale(gs.profile, 1.1).values());
  REQUIRE(r.K < 0.0);
  const auto d = compute_d(r, p);
  CHECK(d.d2 > gs.d_omega);
  CHECK(d.d3 > gs.d_omega);
  GroundState off = gs;
  off.report = r;
  CHECK_THROWS_AS(compute_d(off), SolverError);
}

TEST_CASE("competitors with equal L^{p+1} norm do not undercut the ground state") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 1024, 4, 2.0);
  const auto p = model(0.5, 4.0);
  const auto gs = solve_ground_state(p, g, default_initial_guess(g, 4.0), GroundStateMethod::gradient_flow);
  const DiscreteModel m(g, p);
  const double target = gs.report.Lp1;
  const double eps = 1e-8 * std::abs(gs.report.S);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto r = g->nodes();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<cplx> v(g->size());
    const int family = trial % 3;
    const double a = 0.3 + 1.5 * u(rng), c = 0.5 * u(rng);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (family == 0) v[k] = std::exp(-std::pow(r[k] / a, 2));
      else if (family == 1) v[k] = std::max(0.0, 1.0 - std::pow(r[k] / (2 * a), 2));
      else v[k] = gs.profile.values()[k] * (1.0 + c * std::cos(a * r[k]) * std::exp(-r[k]));
    }
    const double lp = m.Lp1(v);
    const double mu = std::pow(target / lp, 1.0 / (p.p + 1));
    for (auto& x : v) x *= mu;
    const auto rv = m.report(v);
    CHECK(rv.K >= -eps);
    CHECK(rv.S >= gs.report.S - eps);
  }
}

TEST_CASE("save and reload is bit-exact") {
  auto g = build_grid(GridKind::radial, 1, 16.0, 512, 4, 1.5);
  const auto gs = solve_ground_state(model(0.5, 4.0), g, default_initial_guess(g, 4.0), GroundStateMethod::nehari_descent);
  const auto dir = std::filesystem::temp_directory_path() / "nlsi_gs_test";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "gs.csv").string(), json = (dir / "gs.json").string();
  save_ground_state(gs, csv, json);
  const auto back = load_ground_state(csv, json);
  REQUIRE(back.profile.size() == gs.profile.size());
  for (std::size_t k = 0; k < gs.profile.size(); ++k) CHECK(back.profile.values()[k] == gs.profile.values()[k]);
  CHECK(back.report.S == gs.report.S);
  CHECK(back.residual == gs.residual);
  CHECK(back.method == gs.method);
  CHECK(back.profile.grid().graded());
  CHECK(back.profile.grid().nodes()[7] == gs.profile.grid().nodes()[7]);
  std::filesystem::remove_all(dir);
}
