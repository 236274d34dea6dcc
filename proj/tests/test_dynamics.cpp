#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nlsi/dynamics.hpp"

using namespace nlsi;

namespace {

ModelParams model(double gamma, double omega) {
  ModelParams p;
  p.gamma = gamma;
  p.alpha = 0.5;
  p.p = 7.0;
  p.omega = omega;
  return p;
}

GridPtr graded() { return build_grid(GridKind::radial, 1, 16.0, 1536, 4, 2.0); }

GroundState ground(const ModelParams& p, const GridPtr& g) {
  return solve_ground_state(p, g, default_initial_guess(g, p.omega), GroundStateMethod::gradient_flow);
}

double max_drift(const std::vector<double>& x) {
  double d = 0;
  for (double v : x) d = std::max(d, std::abs(v - x.front()) / std::abs(x.front()));
  return d;
}

}  // namespace

TEST_CASE("free Gaussian follows the quadratic virial law") {
  auto g = build_grid(GridKind::radial, 1, 40.0, 4096);
  const Profile u0 = Profile::sample(g, GaussianTag{1.0, 1.0}).untagged();
  SimulationOptions o;
  o.dt = 2e-3;
  o.t_max = 2.0;
  o.sample_every = 25;
  o.potential_on = false;
  o.nonlinearity_on = false;
  const auto tr = simulate(u0, model(1.0, 1.0), o);
  CHECK(tr.blowup.kind == BlowupKind::none);
  const double v0 = tr.virial.front(), g0 = tr.grad2.front();
  // E_free = grad2/2, so ||xu||² = ||xu0||² + 8 t² E_free
  double worst = 0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    worst = std::max(worst, std::abs(tr.virial[i] - (v0 + 4 * t * t * g0)) / (v0 + 4 * t * t * g0));
  }
  CHECK(worst < 1e-3);
  CHECK(max_drift(tr.mass) < 1e-12);
  CHECK(max_drift(tr.grad2) < 1e-9);
  CHECK(virial_consistency(tr) < 1e-3);
}

TEST_CASE("standing wave is stationary in modulus") {
  auto g = graded();
  const auto gs = ground(model(0.5, 1.0), g);
  REQUIRE(second_variation_at_1(gs) > 0);
  SimulationOptions o;
  o.dt = 1e-3;
  o.t_max = 10.0;
  o.sample_every = 50;
  o.reference = &gs;
  const auto tr = simulate(gs.profile, gs.params, o);
  CHECK(tr.blowup.kind == BlowupKind::none);
  CHECK(tr.times.back() == doctest::Approx(10.0));
  CHECK(max_drift(tr.mass) <= 1e-6);
  CHECK(max_drift(tr.energy) <= 1e-6);
  CHECK(max_drift(tr.virial) <= 1e-6);
  CHECK(max_drift(tr.grad2) <= 1e-6);
  const auto inv = monitor_invariance(tr, gs);
  CHECK_FALSE(inv.ran);  // φ is on the boundary of ℬ_ω
  for (std::size_t i = 0; i < tr.times.size(); ++i) CHECK(std::abs(tr.Q[i]) < 1e-6);
}

TEST_CASE("Strang splitting is second order") {
  auto g = graded();
  const auto gs = ground(model(0.5, 1.0), g);
  auto error = [&](double dt) {
    SimulationOptions o;
    o.dt = dt;
    o.t_max = 1.0;
    o.sample_every = 1000000;
    const auto tr = simulate(gs.profile, gs.params, o);
    const cplx rot = std::polar(1.0, gs.params.omega * 1.0);
    double e = 0;
    for (std::size_t k = 0; k < g->size(); ++k)
      e = std::max(e, std::abs(tr.final_state.values()[k] - rot * gs.profile.values()[k]));
    return e;
  };
  const double e1 = error(0.02), e2 = error(0.01), e3 = error(0.005);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("conservative scheme conserves the discrete energy") {
  auto g = graded();
  const auto gs = ground(model(0.5, 1.0), g);
  const Profile u0 = amplitude_scale(scale(gs.profile, 1.3), 0.9);
  SimulationOptions o;
  o.scheme = TimeScheme::conservative;
  o.dt = 1e-2;
  o.t_max = 2.0;
  o.sample_every = 5;
  const auto tr = simulate(u0, gs.params, o);
  CHECK(tr.blowup.kind == BlowupKind::none);
  CHECK(max_drift(tr.mass) < 1e-12);
  CHECK(max_drift(tr.energy) < 1e-10);
}

TEST_CASE("linear flow with a bound state stays bounded") {
  auto g = graded();
  const auto p = model(1.0, 1.0);
  const auto s = estimate_omega0(p, g);
  SimulationOptions o;
  o.dt = 1e-2;
  o.t_max = 5.0;
  o.nonlinearity_on = false;
  const auto tr = simulate(s.rayleigh_minimizer, p, o);
  CHECK(tr.blowup.kind == BlowupKind::none);
  CHECK(max_drift(tr.grad2) < 1e-8);
  CHECK(max_drift(tr.energy) < 1e-10);
  CHECK(detect_blowup(tr).kind == BlowupKind::none);
}

TEST_CASE("virial identity converges in dt") {
  auto g = graded();
  const auto gs = ground(model(0.5, 4.0), g);
  const Profile u0 = build_cutoff_data(gs, 1.2, 10 * profile_width(gs.profile));
  double prev = 0;
  for (double dt : {4e-4, 2e-4, 1e-4}) {
    SimulationOptions o;
    o.dt = dt;
    o.t_max = 0.06;
    o.sample_every = 10;
    o.drift_tolerance = 1.0;
    const auto tr = simulate(u0, gs.params, o);
    const double e = virial_consistency(tr);
    CHECK(e < 0.01);
    if (prev > 0) CHECK(prev / e == doctest::Approx(4.0).epsilon(0.25));
    prev = e;
  }
}

TEST_CASE("cutoff data") {
  CHECK(cutoff(0.5) == 1.0);
  CHECK(cutoff(1.0) == 1.0);
  CHECK(cutoff(2.0) == 0.0);
  CHECK(cutoff(1.5) == doctest::Approx(0.5));
  for (double s = 1.01; s < 2; s += 0.01) CHECK(cutoff(s) <= cutoff(s - 0.01));
  auto g = graded();
  const auto gs = ground(model(0.5, 4.0), g);
  const Profile same = build_cutoff_data(gs, 1.0, 2 * g->radius());
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(same.values()[k] == gs.profile.values()[k]);
  const double width = profile_width(gs.profile);
  const Profile u = build_cutoff_data(gs, 1.2, 10 * width);
  CHECK(membership(u, gs).in_B);
  const DiscreteModel m(g, gs.params);
  CHECK(m.mass(u.values()) <= gs.report.mass * (1 + 1e-10));
  auto h1 = [&](const Profile& v) {
    const Profile d = combine(1.0, v, -1.0, gs.profile);
    return m.mass(d.values()) + m.grad2(d.values());
  };
  double prev = h1(build_cutoff_data(gs, 1.4, 2 * width));
  for (auto [l, M] : {std::pair{1.2, 4.0}, {1.1, 8.0}, {1.02, 16.0}, {1.005, 40.0}}) {
    const double d = h1(build_cutoff_data(gs, l, M * width));
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(build_cutoff_data(gs, 0.9, 1.0), std::invalid_argument);
}

TEST_CASE("blowup from cutoff data") {
  auto g = graded();
  const auto gs = ground(model(0.5, 4.0), g);
  REQUIRE(second_variation_at_1(gs) <= 0);
  const Profile u0 = build_cutoff_data(gs, 1.2, 10 * profile_width(gs.profile));
  SimulationOptions o;
  o.scheme = TimeScheme::conservative;
  o.adaptive = true;
  o.dt = 1e-4;
  o.t_max = 5.0;
  o.sample_every = 10;
  o.reference = &gs;
  const auto tr = simulate(u0, gs.params, o);
  REQUIRE(tr.blowup.kind == BlowupKind::detected);
  CHECK(tr.grad2.back() >= 1e3 * tr.grad2.front());
  CHECK(tr.blowup.predicted_vanishing > tr.blowup.t_star);
  CHECK(tr.blowup.concavity_bound < 0);
  CHECK(max_drift(tr.mass) <= 1e-6);
  CHECK(max_drift(tr.energy) <= 1e-6);
  const auto inv = monitor_invariance(tr, gs);
  CHECK(inv.ran);
  CHECK(inv.all_in_B);
  CHECK(inv.max_second_difference <= tr.blowup.concavity_bound);
  CHECK(inv.max_action_drift <= 1e-6);

  SUBCASE("trace csv") {
    const auto path = (std::filesystem::temp_directory_path() / "nlsi_trace.csv").string();
    write_trace_csv(tr, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,mass,energy,action,virial,Q,grad2,in_A,in_B");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == static_cast<int>(tr.times.size()));
    std::filesystem::remove(path);
  }
}

TEST_CASE("fixed-step Strang run reports exhaustion instead of blowup") {
  auto g = graded();
  const auto gs = ground(model(0.5, 4.0), g);
  const Profile u0 = build_cutoff_data(gs, 1.2, 10 * profile_width(gs.profile));
  SimulationOptions o;
  o.dt = 1e-4;
  o.t_max = 1.0;
  const auto tr = simulate(u0, gs.params, o);
  CHECK(tr.blowup.kind == BlowupKind::unresolved);
  CHECK(tr.blowup.criterion.find("resolution") != std::string::npos);
}

TEST_CASE("bad options") {
  auto g = graded();
  SimulationOptions o;
  o.dt = 0;
  CHECK_THROWS_AS(simulate(Profile::sample(g, GaussianTag{}), model(0.5, 1.0), o), std::invalid_argument);
  o.dt = 1e-3;
  CHECK_THROWS_AS(simulate(Profile::zero(g), model(0.5, 1.0), o), std::invalid_argument);
  CHECK(scheme_from_string(to_string(TimeScheme::conservative)) == TimeScheme::conservative);
  CHECK_THROWS_AS(scheme_from_string("euler"), std::invalid_argument);
}
