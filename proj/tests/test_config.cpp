#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlsi/experiments.hpp"

using namespace nlsi;
namespace fs = std::filesystem;

namespace {

const char* kModel = R"(
[model]
N = 1
potential = inverse_power
gamma = 0.5
alpha = 0.5
p = 7
omega = 4

[grid]
kind = radial
R = 16
M = 1536
grade = 2
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nlsi_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("parse a full configuration") {
  const auto c = parse_config(std::string(kModel) + R"(
# comment
[solver]
method = nehari_descent
tolerance = 1e-10
; another comment
[dynamics]
scheme = strang
adaptive = false
t_max = 0.5

[experiment]
seed = 42
omegas = 1, 2.5, 4
lambdas = 1.1,1.3
)");
  CHECK(c.has_model);
  CHECK(c.model.N == 1);
  CHECK(c.model.gamma == 0.5);
  CHECK(c.model.p == 7.0);
  CHECK(c.model.kind == PotentialKind::inverse_power);
  CHECK(c.grid.M == 1536);
  CHECK(c.grid.grade == 2.0);
  CHECK(c.method == GroundStateMethod::nehari_descent);
  CHECK(c.solver.tolerance == 1e-10);
  CHECK(c.dynamics.scheme == TimeScheme::strang);
  CHECK_FALSE(c.dynamics.adaptive);
  CHECK(c.experiment.seed == 42);
  CHECK(c.experiment.omegas == std::vector<double>{1, 2.5, 4});
  CHECK(c.experiment.lambdas == std::vector<double>{1.1, 1.3});
  const auto o = c.simulation_options();
  CHECK(o.t_max == 0.5);
  CHECK(o.scheme == TimeScheme::strang);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(parse_config("[model]\nN = 1\ngamma = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string(kModel) + "[grid2]\nR = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string(kModel) + "[dynamics]\ndtt = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nR = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nM = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[dynamics]\nadaptive = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[dynamics]\nscheme = euler\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[dynamics]\ninitial = noise\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("R = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\n"), ConfigError);
  // p above the admissible range for N = 1 is not a valid model
  CHECK_THROWS_AS(parse_config("[model]\nN=1\npotential=inverse_power\ngamma=0.5\nalpha=0.5\np=1\nomega=4\n"),
                  ConfigError);
  // inverse power needs alpha; the delta potential fixes it
  CHECK_THROWS_AS(parse_config("[model]\nN=1\npotential=inverse_power\ngamma=0.5\np=7\nomega=4\n"), ConfigError);
  const auto d = parse_config("[model]\nN=1\npotential=delta\ngamma=0.5\np=7\nomega=4\n");
  CHECK(d.model.kind == PotentialKind::delta);
  CHECK(d.model.alpha == 1.0);

  const auto empty = parse_config("");
  CHECK_FALSE(empty.has_model);
  CHECK_THROWS_AS(empty.require_model(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("text and JSON round trips are exact") {
  auto c = parse_config(kModel);
  c.model.gamma = 0.1 + 1e-17;
  c.model.omega = std::nextafter(4.0, 5.0);
  c.experiment.omegas = {1.0 / 3, 2.0 / 7};
  c.solver.acceptable = 3e-9;
  const auto back = parse_config(to_config_text(c));
  CHECK(back.model.gamma == c.model.gamma);
  CHECK(back.model.omega == c.model.omega);
  CHECK(back.experiment.omegas == c.experiment.omegas);
  CHECK(to_json(back) == to_json(c));
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  CHECK(to_config_text(parse_config(to_config_text(c))) == to_config_text(c));
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.command = "ground-state";
  m.status = "ok";
  m.config = parse_config(kModel);
  m.artifacts = {"a.csv"};
  m.verdicts = {{"x", 1.5}};
  m.wall_seconds = 0.25;
  const auto j = m.to_json();
  CHECK(j["version"] == kToolVersion);
  CHECK(RunManifest::from_json(j).to_json() == j);
  const auto dir = scratch("manifest");
  write_manifest(m, dir.string());
  CHECK(read_manifest(dir.string()).to_json() == j);
  fs::remove_all(dir);
}

TEST_CASE("g-chain run and determinism") {
  const auto c = parse_config("[experiment]\nseed = 3\ngchain_alpha = 1\ngchain_beta = 3\ngchain_pairs = 20\ngchain_points = 2000\n");
  const auto a = scratch("gc_a"), b = scratch("gc_b");
  const auto ma = run_command("g-chain", c, a.string());
  auto c2 = c;
  c2.experiment.workers = 3;
  const auto mb = run_command("g-chain", c2, b.string());
  CHECK(ma.status == "ok");
  CHECK(ma.verdicts["g_chain"]["closed_form_ok"] == true);
  CHECK(ma.verdicts["g_chain_sweep"]["violations"] == 0);
  for (const auto& f : ma.artifacts) CHECK(fs::exists(a / f));
  for (const char* f : {"g_chain.csv", "g_chain_sweep.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("usage errors") {
  const auto d = scratch("usage");
  CHECK_THROWS_AS(run_command("g-chain", parse_config(""), d.string()), ConfigError);
  CHECK_THROWS_AS(run_command("simulate", parse_config(""), d.string()), ConfigError);
  CHECK_THROWS_AS(run_command("omega-scan", parse_config(kModel), d.string()), ConfigError);
  CHECK_THROWS_AS(run_command("fly", parse_config(kModel), d.string()), std::invalid_argument);
  CHECK_FALSE(fs::exists(d / "manifest.json"));
}

TEST_CASE("failed step leaves a partial manifest") {
  auto c = parse_config(kModel);
  c.model.omega = 1.0;  // S''(1) > 0 here
  const auto d = scratch("partial");
  const auto m = run_command("blowup-experiment", c, d.string());
  CHECK(m.status == "failed");
  CHECK(exit_code(m) != 0);
  CHECK(m.error.find("S''(1) > 0") != std::string::npos);
  CHECK(m.verdicts["ground_state"]["S2_at_1"].get<double>() > 0);
  const auto back = read_manifest(d.string());
  CHECK(back.status == "failed");
  for (const auto& f : back.artifacts) CHECK(fs::exists(d / f));
  fs::remove_all(d);
}

TEST_CASE("scaling curve peaks at 1 on the unstable side") {
  const auto d = scratch("curve");
  const auto m = run_command("ground-state", parse_config(kModel), d.string());
  REQUIRE(m.status == "ok");
  REQUIRE(m.verdicts["ground_state"]["S2_at_1"].get<double>() < 0);
  std::ifstream in(d / "scaling_curve.dat");
  std::string line;
  std::getline(in, line);
  double best = -1e300, at = 0, l, s;
  while (in >> l >> s)
    if (s > best) best = s, at = l;
  CHECK(at == doctest::Approx(1.0));
  fs::remove_all(d);
}

TEST_CASE("same config and seed reproduce trace bytes") {
  auto c = parse_config(kModel);
  c.dynamics.t_max = 0.02;
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  CHECK(run_command("simulate", c, a.string()).status == "ok");
  CHECK(run_command("simulate", c, b.string()).status == "ok");
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "virial.dat") == slurp(b / "virial.dat"));
  const auto m = read_manifest(a.string());
  CHECK(m.verdicts["initial"]["in_B"] == true);
  const auto sum = scratch("report");
  fs::create_directories(sum);
  fs::rename(a, sum / "sim");
  CHECK(run_command("report", parse_config(""), sum.string()).status == "ok");
  CHECK(fs::exists(sum / "report.txt"));
  CHECK(run_command("report", parse_config(""), b.string()).status == "failed");
  fs::remove_all(sum);
  fs::remove_all(b);
}
