#include "nlsi/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace nlsi {

namespace fs = std::filesystem;

namespace {

struct Run {
  RunManifest m;
  fs::path dir;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void add(const std::string& name) { m.artifacts.push_back(name); }
  nlohmann::json& v() { return m.verdicts; }
};

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

GroundState solve(const Config& c) {
  const auto& p = c.require_model();
  const auto grid = c.grid.build(p.N);
  return solve_ground_state(p, grid, default_initial_guess(grid, p.omega), c.method, c.solver);
}

double beta_of(const ModelParams& p) { return p.N * (p.p - 1) / 2; }

void record_ground_state(Run& run, const GroundState& gs, const std::string& key) {
  const auto& r = gs.report;
  const double S2 = second_variation_at_1(gs);
  run.v()[key] = {{"S", r.S},
                  {"E", r.E},
                  {"mass", r.mass},
                  {"grad2", r.grad2},
                  {"G", r.G},
                  {"Lp1", r.Lp1},
                  {"K_relative", std::abs(r.K) / r.L_omega},
                  {"Q_relative", std::abs(r.Q) / r.grad2},
                  {"residual", gs.residual},
                  {"iterations", gs.iterations},
                  {"omega0", gs.omega0},
                  {"d", gs.d_omega},
                  {"S2_at_1", S2},
                  {"instability_condition", S2 <= 0}};
}

void save_ground(Run& run, const GroundState& gs) {
  save_ground_state(gs, run.path("ground_state.csv"), run.path("ground_state.json"));
  run.add("ground_state.csv");
  run.add("ground_state.json");
}

void cmd_ground_state(Run& run, const Config& c) {
  const auto gs = solve(c);
  save_ground(run, gs);
  record_ground_state(run, gs, "ground_state");
  const auto curve = action_curve(gs.report, gs.params);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i <= 300; ++i) {
    const double l = 0.5 + 0.005 * i;
    rows.push_back({l, curve.S(l), curve.Q(l)});
  }
  write_csv(run.path("scaling_curve.csv"), "lambda,S,Q", rows);
  run.add("scaling_curve.csv");
}

void cmd_omega_scan(Run& run, const Config& c) {
  const auto& p = c.require_model();
  ScanOptions o;
  o.method = c.method;
  o.solver = c.solver;
  o.refine = c.experiment.refine;
  o.refine_width = c.experiment.refine_width;
  o.workers = c.experiment.workers;
  const GridConfig g = c.grid;
  const auto factory = [g, N = p.N](double w) {
    GridConfig h = g;
    h.R = std::max(g.R, 24.0 / std::sqrt(w));
    return h.build(N);
  };
  const auto res = omega_scan(p, c.experiment.omegas, factory, o);
  std::vector<std::vector<double>> rows;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : res.rows) {
    if (r.ok) rows.push_back({r.omega, r.S, r.E, r.d, r.S2, static_cast<double>(r.sign)});
    else failures.push_back({{"omega", r.omega}, {"error", r.error}});
  }
  write_csv(run.path("omega_scan.csv"), "omega,S,E,d,S2,sign", rows);
  run.add("omega_scan.csv");
  run.v()["omega_scan"] = {{"points", res.rows.size()},
                           {"failed", failures},
                           {"bracketed", res.bracketed},
                           {"omega_pos", res.bracketed ? res.omega_pos : nan()},
                           {"omega_nonpos", res.bracketed ? res.omega_nonpos : nan()},
                           {"bracket_width", res.bracketed ? res.omega_nonpos - res.omega_pos : nan()},
                           {"omega1_upper", res.omega1_upper}};
  if (!failures.empty() && rows.empty()) throw SolverError("every scan point failed");
}

nlohmann::json gchain_json(const GChainReport& r) {
  return {{"alpha", r.alpha},        {"beta", r.beta},     {"points", r.points},     {"min_g1", r.min_g1},
          {"max_g2", r.max_g2},      {"min_g3", r.min_g3}, {"max_dg3", r.max_dg3},   {"g1_near_1", r.g1_near_1},
          {"g2_at_1", r.g2_at_1},    {"g3_at_1", r.g3_at_1}, {"violations", r.violations}, {"worst", r.worst}};
}

void cmd_g_chain(Run& run, const Config& c) {
  const auto& e = c.experiment;
  bool failed = false;
  if (e.gchain_alpha > 0 || c.has_model) {
    const double a = e.gchain_alpha > 0 ? e.gchain_alpha : c.model.alpha;
    const double b = e.gchain_beta > 0 ? e.gchain_beta : beta_of(c.model);
    const auto lambdas = lambda_grid(e.gchain_points);
    std::vector<std::vector<double>> rows;
    double closed = 0;
    for (double l : lambdas) {
      rows.push_back({l, l < 1 - 1e-6 ? g1(l, a, b) : nan(), g2(l, a, b), g3(l, a, b), dg3(l, a, b)});
      if (a == 1 && b == 3)
        closed = std::max({closed, std::abs(g3(l, a, b) - (1 - l) * (1 - l)), std::abs(g2(l, a, b) - 2 * std::pow(l - 1, 3))});
    }
    write_csv(run.path("g_chain.csv"), "lambda,g1,g2,g3,dg3", rows);
    run.add("g_chain.csv");
    GChainReport r;
    try {
      r = g_chain(a, b, lambdas);
    } catch (const ProofViolation& ex) {
      run.v()["g_chain"] = {{"alpha", a}, {"beta", b}, {"violation", ex.what()}};
      throw;
    }
    run.v()["g_chain"] = gchain_json(r);
    if (a == 1 && b == 3) {
      run.v()["g_chain"]["closed_form_max_error"] = closed;
      run.v()["g_chain"]["closed_form_ok"] = closed <= 1e-12;
      failed |= closed > 1e-12;
    }
    failed |= r.g2_at_1 != 0 || r.g3_at_1 != 0;
  }
  if (e.gchain_pairs > 0) {
    const auto s = g_chain_sweep(e.gchain_pairs, e.gchain_points, e.seed, e.gchain_beta_max, e.workers);
    std::vector<std::vector<double>> rows;
    for (const auto& r : s.pairs)
      rows.push_back({r.alpha, r.beta, r.min_g1, r.max_g2, r.min_g3, r.max_dg3, static_cast<double>(r.violations)});
    write_csv(run.path("g_chain_sweep.csv"), "alpha,beta,min_g1,max_g2,min_g3,max_dg3,violations", rows);
    run.add("g_chain_sweep.csv");
    run.v()["g_chain_sweep"] = {{"pairs", s.pairs.size()}, {"points", e.gchain_points}, {"violations", s.total_violations}};
    failed |= s.total_violations > 0;
  }
  if (failed) throw ProofViolation("g-chain sign or boundary check failed");
}

void cmd_verify(Run& run, const Config& c) {
  const auto gs = solve(c);
  save_ground(run, gs);
  record_ground_state(run, gs, "ground_state");
  const auto& e = c.experiment;
  bool failed = false;

  const auto key = key_inequality_sweep(gs, e.key_samples, e.seed, e.workers);
  std::vector<std::vector<double>> rows;
  for (const auto& k : key.counterexamples)
    rows.push_back({k.v.mass, k.v.grad2, k.v.G, k.v.Lp1, k.lhs, k.rhs, k.margin});
  write_csv(run.path("key_counterexamples.csv"), "mass,grad2,G,Lp1,lhs,rhs,margin", rows);
  run.add("key_counterexamples.csv");
  run.v()["key_inequality"] = {{"samples", key.samples},   {"rejected", key.rejected},
                               {"warnings", key.warnings}, {"violations", key.violations},
                               {"min_margin", key.min_margin}};
  failed |= key.violations > 0;

  const auto comp = competitor_sweep(gs, e.competitor_samples, e.seed, e.workers);
  run.v()["competitors"] = {{"samples", comp.samples},
                            {"K_violations", comp.K_violations},
                            {"action_violations", comp.action_violations},
                            {"min_K", comp.min_K},
                            {"min_action_gap", comp.min_action_gap}};
  failed |= comp.K_violations > 0 || comp.action_violations > 0;

  const auto gc = g_chain(gs.params.alpha, beta_of(gs.params), lambda_grid(e.gchain_points));
  run.v()["g_chain"] = gchain_json(gc);

  if (second_variation_at_1(gs) <= 0) {
    const auto fam = check_scaling_family(gs, e.lambdas);
    std::vector<std::vector<double>> frows;
    for (const auto& q : fam.points)
      frows.push_back({q.lambda, q.S, q.dS, q.d2S, q.Q, q.dQ, static_cast<double>(q.member.in_B), static_cast<double>(q.ok)});
    write_csv(run.path("scaling_family.csv"), "lambda,S,dS,d2S,Q,dQ,in_B,ok", frows);
    run.add("scaling_family.csv");
    run.v()["scaling_family"] = {{"points", fam.points.size()}, {"coefficient_gap", fam.coefficient_gap}, {"all_ok", true}};
  } else {
    run.v()["scaling_family"] = {{"skipped", "S''(1) > 0 at this point"}};
  }
  if (failed) throw ProofViolation("inequality sweep found violations");
}

double max_drift(const std::vector<double>& x) {
  double d = 0;
  for (double v : x) d = std::max(d, std::abs(v - x.front()) / std::abs(x.front()));
  return d;
}

void record_trace(Run& run, const SimulationTrace& tr, const GroundState* gs) {
  write_trace_csv(tr, run.path("trace.csv"));
  run.add("trace.csv");
  int smooth = 0;
  while (smooth + 1 < static_cast<int>(tr.times.size()) && tr.grad2[smooth + 1] <= 2 * tr.grad2.front()) ++smooth;
  nlohmann::json j = {{"samples", tr.times.size()},
                      {"steps", tr.steps},
                      {"t_final", tr.times.back()},
                      {"grid", tr.grid},
                      {"mass_drift", max_drift(tr.mass)},
                      {"energy_drift", max_drift(tr.energy)},
                      {"grad2_growth", tr.grad2.back() / tr.grad2.front()},
                      {"blowup", to_string(tr.blowup.kind)},
                      {"blowup_criterion", tr.blowup.criterion},
                      {"t_star", tr.blowup.t_star},
                      {"predicted_vanishing", tr.blowup.predicted_vanishing},
                      {"concavity_bound", tr.blowup.concavity_bound}};
  j["virial_consistency"] = smooth >= 2 ? virial_consistency(tr, 0, smooth) : nan();
  if (gs) {
    const auto inv = monitor_invariance(tr, *gs);
    if (!inv.ran) j["invariance"] = {{"ran", false}, {"reason", "initial datum not in B_omega"}};
    else j["invariance"] = {{"ran", inv.ran},
                       {"all_in_B", inv.all_in_B},
                       {"first_exit", inv.first_exit},
                       {"min_action_margin", inv.min_action_margin},
                       {"min_mass_margin", inv.min_mass_margin},
                       {"min_lp1_margin", inv.min_lp1_margin},
                       {"min_q_margin", inv.min_q_margin},
                       {"max_action_drift", inv.max_action_drift},
                       {"max_second_difference", inv.max_second_difference},
                       {"concavity_ok", inv.ran && inv.max_second_difference <= tr.blowup.concavity_bound}};
  }
  run.v()["simulation"] = j;
}

Profile cutoff_datum(Run& run, const Config& c, const GroundState& gs) {
  const double width = profile_width(gs.profile);
  const Profile u0 = build_cutoff_data(gs, c.experiment.lambda0, c.experiment.cutoff_M * width);
  const auto mem = membership(u0, gs);
  const auto r = eval_report(u0, gs.params);
  run.v()["initial"] = {{"kind", "cutoff"},
                        {"lambda0", c.experiment.lambda0},
                        {"M", c.experiment.cutoff_M * width},
                        {"in_A", mem.in_A},
                        {"in_B", mem.in_B},
                        {"action_margin", mem.action_margin},
                        {"mass_margin", mem.mass_margin},
                        {"lp1_margin", mem.lp1_margin},
                        {"q_margin", mem.q_margin},
                        {"S", r.S},
                        {"action_gap", r.S - gs.report.S}};
  return u0;
}

void cmd_simulate(Run& run, const Config& c) {
  const auto& p = c.require_model();
  auto o = c.simulation_options();
  const auto& kind = c.dynamics.initial;
  if (kind == "gaussian") {
    const auto grid = c.grid.build(p.N);
    const Profile u0 = Profile::sample(grid, GaussianTag{c.dynamics.gaussian_width, c.dynamics.gaussian_amplitude}).untagged();
    run.v()["initial"] = {{"kind", kind}, {"width", c.dynamics.gaussian_width}, {"amplitude", c.dynamics.gaussian_amplitude}};
    record_trace(run, simulate(u0, p, o), nullptr);
    return;
  }
  const auto gs = solve(c);
  record_ground_state(run, gs, "ground_state");
  o.reference = &gs;
  const Profile u0 = kind == "ground_state" ? gs.profile : cutoff_datum(run, c, gs);
  if (kind == "ground_state") run.v()["initial"] = {{"kind", kind}};
  record_trace(run, simulate(u0, gs.params, o), &gs);
}

void cmd_blowup(Run& run, const Config& c) {
  const auto gs = solve(c);
  save_ground(run, gs);
  record_ground_state(run, gs, "ground_state");
  if (second_variation_at_1(gs) > 0)
    throw std::domain_error("S''(1) > 0 at this point: the construction does not apply");
  const Profile u0 = cutoff_datum(run, c, gs);
  if (!run.v()["initial"]["in_B"].get<bool>()) throw std::domain_error("initial datum is not in B_omega");
  auto o = c.simulation_options();
  o.reference = &gs;
  const auto tr = simulate(u0, gs.params, o);
  record_trace(run, tr, &gs);
  const auto& s = run.v()["simulation"];
  run.v()["verdict"] = {{"blowup", to_string(tr.blowup.kind)},
                        {"in_B_throughout", s["invariance"]["all_in_B"]},
                        {"concavity_ok", s["invariance"]["concavity_ok"]}};
}

void cmd_report(Run& run, const Config&) {
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(run.dir))
    if (d.is_directory() && fs::exists(d.path() / "manifest.json")) dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw std::runtime_error("no run manifests under " + run.dir.string());
  nlohmann::json runs = nlohmann::json::array();
  std::ofstream all(run.path("report.txt"));
  for (const auto& d : dirs) {
    const auto m = read_manifest(d.string());
    emit_report(m, d.string());
    runs.push_back({{"dir", d.filename().string()}, {"command", m.command}, {"status", m.status}});
    std::ifstream in(d / "summary.txt");
    all << "== " << d.filename().string() << "\n" << in.rdbuf() << "\n";
  }
  if (!all) throw std::runtime_error("cannot write " + run.path("report.txt"));
  run.add("report.txt");
  run.v()["runs"] = runs;
}

bool needs_model(const std::string& cmd) { return cmd != "g-chain" && cmd != "report"; }

void precheck(const std::string& cmd, const Config& c) {
  if (needs_model(cmd)) c.require_model();
  if (cmd == "omega-scan" && c.experiment.omegas.empty()) throw ConfigError("omega-scan needs experiment.omegas");
  if (cmd == "g-chain") {
    const auto& e = c.experiment;
    if ((e.gchain_alpha > 0) != (e.gchain_beta > 0))
      throw ConfigError("g-chain needs both experiment.gchain_alpha and experiment.gchain_beta");
    if (e.gchain_alpha <= 0 && e.gchain_pairs <= 0 && !c.has_model)
      throw ConfigError("g-chain needs an (alpha, beta) pair, experiment.gchain_pairs or a [model] section");
  }
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"ground-state", "omega-scan", "verify-inequalities", "g-chain",
                                          "simulate",     "blowup-experiment", "report"};
  return s;
}

RunManifest run_command(const std::string& command, const Config& config, const std::string& dir) {
  if (std::find(subcommands().begin(), subcommands().end(), command) == subcommands().end())
    throw std::invalid_argument("unknown command " + command);
  precheck(command, config);
  Run run;
  run.m.command = command;
  run.m.config = config;
  run.dir = dir;
  fs::create_directories(run.dir);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (command == "ground-state") cmd_ground_state(run, config);
    else if (command == "omega-scan") cmd_omega_scan(run, config);
    else if (command == "verify-inequalities") cmd_verify(run, config);
    else if (command == "g-chain") cmd_g_chain(run, config);
    else if (command == "simulate") cmd_simulate(run, config);
    else if (command == "blowup-experiment") cmd_blowup(run, config);
    else cmd_report(run, config);
    run.m.status = "ok";
  } catch (const std::exception& e) {
    run.m.status = "failed";
    run.m.error = e.what();
  }
  run.m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(run.m, dir);
  for (const auto& f : emit_report(run.m, dir)) run.m.artifacts.push_back(f);
  write_manifest(run.m, dir);
  return run.m;
}

}  // namespace nlsi
