#include "nlsi/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

namespace nlsi {

namespace {

template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  const std::size_t w = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(n, 1));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) f(i);
    });
  for (auto& th : pool) th.join();
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

// ------------------------------------------------------------ action curve

double ActionCurve::S(double l) const {
  return A * l * l + B - C * std::pow(l, alpha) - D * std::pow(l, beta);
}
double ActionCurve::dS(double l) const {
  return 2 * A * l - alpha * C * std::pow(l, alpha - 1) - beta * D * std::pow(l, beta - 1);
}
double ActionCurve::d2S(double l) const {
  return 2 * A - alpha * (alpha - 1) * C * std::pow(l, alpha - 2) - beta * (beta - 1) * D * std::pow(l, beta - 2);
}
double ActionCurve::d3S(double l) const {
  return -alpha * (alpha - 1) * (alpha - 2) * C * std::pow(l, alpha - 3) -
         beta * (beta - 1) * (beta - 2) * D * std::pow(l, beta - 3);
}
double ActionCurve::K(double l) const {
  return 2 * A * l * l + 2 * B - 2 * C * std::pow(l, alpha) - (p + 1) * D * std::pow(l, beta);
}
double ActionCurve::argmax_free() const {
  return std::pow(2 * A / (beta * D), 1.0 / (beta - 2));
}

ActionCurve action_curve(const FunctionalReport& r, const ModelParams& params) {
  ActionCurve c;
  c.A = r.grad2 / 2;
  c.B = params.omega * r.mass / 2;
  c.C = r.G / 2;
  c.D = r.Lp1 / (params.p + 1);
  c.alpha = params.alpha;
  c.beta = params.beta();
  c.p = params.p;
  return c;
}

ActionCurve action_curve(const Profile& v, const ModelParams& params) {
  if (v.is_zero()) throw std::invalid_argument("action_curve: zero profile");
  return action_curve(eval_report(v, params), params);
}

double second_variation_at_1(const GroundState& gs) { return action_curve(gs.report, gs.params).d2S(1.0); }

// ---------------------------------------------------------------- g-chain

double expm1_minus(double z) {
  if (std::abs(z) < 0.1) {
    // z²/2! + z³/3! + ... to roundoff
    double term = z * z / 2, sum = 0;
    for (int k = 3; k < 30 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
      sum += term;
      term *= z / k;
    }
    return sum;
  }
  return std::expm1(z) - z;
}

// with y = ln λ and λ^c = 1 + c y + X(c y), the constant and linear terms
// of each expression cancel exactly

double g3(double l, double a, double b) {
  const double y = std::log(l);
  return (2 - a) * expm1_minus((b - a) * y) - (b - a) * expm1_minus((2 - a) * y);
}

double dg3(double l, double a, double b) {
  return (b - a) * (2 - a) * std::pow(l, 1 - a) * std::expm1((b - 2) * std::log(l));
}

double g2(double l, double a, double b) {
  const double y = std::log(l);
  return 2 * a * (2 - a) * expm1_minus(b * y) - a * b * (b - a) * expm1_minus(2 * y) +
         2 * b * (b - 2) * expm1_minus(a * y);
}

double g1(double l, double a, double b) {
  const double y = std::log(l);
  const double num = 2 * expm1_minus(b * y) - b * expm1_minus(2 * y);
  const double den = a * expm1_minus(2 * y) - 2 * expm1_minus(a * y);
  return (2 - a * std::pow(l, 2 - a)) * num / (b * std::pow(l, b - a) * den) - std::pow(l, 2 - b) - (b - a - 2) / a;
}

std::vector<double> lambda_grid(std::size_t n) {
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return l;
}

namespace {

GChainReport g_chain_eval(double a, double b, std::span<const double> lambdas, double tol) {
  if (!(a > 0 && a < 2 && b > 2)) throw std::invalid_argument("g_chain: need 0 < alpha < 2 < beta");
  GChainReport r;
  r.alpha = a;
  r.beta = b;
  r.points = lambdas.size();
  r.min_g1 = r.min_g3 = std::numeric_limits<double>::infinity();
  r.max_g2 = r.max_dg3 = -std::numeric_limits<double>::infinity();
  double worst = 0;
  auto flag = [&](double excess, const char* name, double l, double val) {
    ++r.violations;
    if (excess > worst) {
      worst = excess;
      r.worst = std::string(name) + fmt(" at lambda=%.17g: %.6g (alpha=%.17g)", l, val, a);
    }
  };
  const double g1_cut = 1 - 1e-6;
  for (double l : lambdas) {
    if (!(l > 0 && l <= 1)) throw std::invalid_argument("g_chain: lambda outside (0, 1]");
    const double y = std::log(l);
    const double t3 = (2 - a) * std::abs(expm1_minus((b - a) * y)) + (b - a) * std::abs(expm1_minus((2 - a) * y));
    const double t2 = 2 * a * (2 - a) * std::abs(expm1_minus(b * y)) + a * b * (b - a) * std::abs(expm1_minus(2 * y)) +
                      2 * b * (b - 2) * std::abs(expm1_minus(a * y));
    const double v3 = g3(l, a, b), v2 = g2(l, a, b), d3 = dg3(l, a, b);
    r.min_g3 = std::min(r.min_g3, v3);
    r.max_g2 = std::max(r.max_g2, v2);
    r.max_dg3 = std::max(r.max_dg3, d3);
    if (v3 < -tol * std::max(1.0, t3)) flag(-v3, "g3 < 0", l, v3);
    if (v2 > tol * std::max(1.0, t2)) flag(v2, "g2 > 0", l, v2);
    if (d3 > tol * std::max(1.0, (b - a) * (2 - a) * std::pow(l, 1 - a))) flag(d3, "g3' > 0", l, d3);
    if (l <= g1_cut) {
      const double v1 = g1(l, a, b);
      r.min_g1 = std::min(r.min_g1, v1);
      const double t1 = std::pow(l, 2 - b) + std::abs(b - a - 2) / a;
      if (v1 < -tol * std::max(1.0, t1)) flag(-v1, "g1 < 0", l, v1);
    }
  }
  r.g1_near_1 = g1(g1_cut, a, b);
  r.g2_at_1 = g2(1.0, a, b);
  r.g3_at_1 = g3(1.0, a, b);
  return r;
}

}  // namespace

GChainReport g_chain(double alpha, double beta, std::span<const double> lambdas, double tol) {
  auto r = g_chain_eval(alpha, beta, lambdas, tol);
  if (r.violations) throw ProofViolation("g_chain: " + std::to_string(r.violations) + " sign violations; worst " + r.worst);
  return r;
}

GChainSweep g_chain_sweep(int pairs, std::size_t points, std::uint64_t seed, double beta_max, int workers) {
  GChainSweep out;
  out.pairs.resize(static_cast<std::size_t>(std::max(pairs, 0)));
  std::vector<std::pair<double, double>> ab(out.pairs.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(0.0, 2.0), ub(2.0, beta_max);
  for (auto& x : ab) {
    do x.first = ua(rng);
    while (x.first == 0.0);
    do x.second = ub(rng);
    while (x.second == 2.0);
  }
  const auto lambdas = lambda_grid(points);
  parallel_for(ab.size(), workers, [&](std::size_t i) { out.pairs[i] = g_chain_eval(ab[i].first, ab[i].second, lambdas, 1e-12); });
  for (const auto& r : out.pairs) out.total_violations += r.violations;
  return out;
}

// ------------------------------------------------------------ key inequality

std::string to_string(KeyStatus s) {
  switch (s) {
    case KeyStatus::hypotheses_not_met: return "hypotheses_not_met";
    case KeyStatus::holds: return "holds";
    case KeyStatus::holds_with_warnings: return "holds_with_warnings";
    case KeyStatus::violated: return "violated";
  }
  return "?";
}

namespace {

constexpr double kSlack = 1e-10;

KeyInequalityReport key_eval(const FunctionalReport& v, const GroundState& gs, double tol) {
  const auto& phi = gs.report;
  const auto& P = gs.params;
  KeyInequalityReport k;
  k.v = v;
  k.mass_slack = phi.mass - v.mass + kSlack * phi.mass;
  k.lp1_slack = v.Lp1 - phi.Lp1 + kSlack * phi.Lp1;
  k.q_slack = -v.Q + kSlack * std::max(v.grad2, 1e-300);
  if (k.mass_slack < 0 || k.lp1_slack < 0 || k.q_slack < 0) return k;

  const double a = P.alpha, b = P.beta(), p1 = P.p + 1;
  const double eps = tol * std::max(1.0, std::abs(phi.S));
  k.lhs = v.Q / 2;
  k.rhs = v.S - phi.S;
  k.margin = k.rhs - k.lhs + eps;

  const auto curve = action_curve(v, P);
  k.lambda0 = std::pow(phi.Lp1 / v.Lp1, 1.0 / b);
  auto f = [&](double l) { return curve.S(l) - l * l / 2 * v.Q; };
  k.f_lambda0 = f(k.lambda0);
  k.f_1 = f(1.0);
  if (!(k.lambda0 > 0 && k.lambda0 <= 1 + 1e-10)) k.warnings.push_back("lambda0 outside (0, 1]");
  if (k.f_lambda0 > k.f_1 + eps) k.warnings.push_back("f(lambda0) > f(1)");
  const double l0 = k.lambda0;
  k.mass_bound = (1 + b * (b - a - 2) / (p1 * a)) * std::pow(l0, b) * v.Lp1;
  if (P.omega * v.mass > k.mass_bound + eps) k.warnings.push_back("mass bound fails");
  k.potential_bound = 2 * b / (p1 * (2 - a * std::pow(l0, 2 - a))) *
                      (std::pow(l0, 2 - a) + (b - a - 2) / a * std::pow(l0, b - a)) * v.Lp1;
  if (v.G > k.potential_bound + eps) k.warnings.push_back("potential bound fails");

  if (k.margin < 0) k.status = KeyStatus::violated;
  else k.status = k.warnings.empty() ? KeyStatus::holds : KeyStatus::holds_with_warnings;
  return k;
}

void enforce(const KeyInequalityReport& k, const GroundState& gs) {
  if (k.status == KeyStatus::violated && second_variation_at_1(gs) <= 0)
    throw ProofViolation(fmt("key inequality violated: Q/2 = %.17g > S(v) - S(phi) = %.17g (lambda0 %.6g)", k.lhs,
                             k.rhs, k.lambda0));
}

}  // namespace

KeyInequalityReport key_inequality(const FunctionalReport& v, const GroundState& gs, double tol) {
  auto k = key_eval(v, gs, tol);
  enforce(k, gs);
  return k;
}

KeyInequalityReport key_inequality(const Profile& v, const GroundState& gs, double tol) {
  return key_inequality(eval_report(v, gs.params), gs, tol);
}

KeySweep key_inequality_sweep(const GroundState& gs, int samples, std::uint64_t seed, int workers) {
  const auto grid = gs.profile.grid_ptr();
  const DiscreteModel model(grid, gs.params);
  const double mass_phi = gs.report.mass;
  const auto r = grid->nodes();
  const std::size_t n = r.size();

  auto draw = [&](std::uint64_t index) -> std::vector<cplx> {
    std::seed_seq ss{seed, index};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int family = static_cast<int>(index % 4);
    std::vector<cplx> w(n);
    if (family < 3) {
      const double eps = (u(rng) - 0.5) * (family == 0 ? 0.0 : 0.6);
      const double k = 4 * u(rng), th = 6.283185307179586 * u(rng), s = 0.3 + 3 * u(rng);
      const double phase = family == 2 ? 0.5 * (u(rng) - 0.5) : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double eta = std::cos(k * r[i] + th) * std::exp(-(r[i] / s) * (r[i] / s));
        w[i] = gs.profile.values()[i] * (1 + eps * eta) * std::polar(1.0, phase * r[i] * r[i]);
      }
      const double lam = 0.9 + 1.1 * u(rng);
      const Profile d = scale(Profile(grid, w), lam);
      w.assign(d.values().begin(), d.values().end());
    } else {
      const double width = 0.05 + 1.5 * u(rng), shape = 1 + 2 * u(rng);
      for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-std::pow(r[i] / width, 2 * shape) / 2);
    }
    const double frac = 0.9 + 0.1 * u(rng);
    const double mu = std::sqrt(frac * mass_phi / model.mass(w));
    for (auto& x : w) x *= mu;
    return w;
  };

  KeySweep out;
  out.min_margin = std::numeric_limits<double>::infinity();
  std::uint64_t next = 0;
  while (out.samples < samples) {
    const std::size_t batch = static_cast<std::size_t>(2 * (samples - out.samples) + 16);
    std::vector<KeyInequalityReport> reps(batch);
    parallel_for(batch, workers, [&](std::size_t i) { reps[i] = key_eval(model.report(draw(next + i)), gs, 1e-8); });
    next += batch;
    for (auto& k : reps) {
      if (out.samples >= samples) break;
      if (k.status == KeyStatus::hypotheses_not_met) {
        ++out.rejected;
        continue;
      }
      ++out.samples;
      out.min_margin = std::min(out.min_margin, k.margin);
      if (k.status == KeyStatus::holds_with_warnings) ++out.warnings;
      if (k.status == KeyStatus::violated) {
        ++out.violations;
        out.counterexamples.push_back(std::move(k));
      }
    }
  }
  return out;
}

CompetitorSweep competitor_sweep(const GroundState& gs, int samples, std::uint64_t seed, int workers, double tol) {
  const auto grid = gs.profile.grid_ptr();
  const DiscreteModel model(grid, gs.params);
  const double target = gs.report.Lp1, p = gs.params.p;
  const auto r = grid->nodes();
  std::vector<FunctionalReport> reps(static_cast<std::size_t>(std::max(samples, 0)));
  parallel_for(reps.size(), workers, [&](std::size_t index) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(index), std::uint64_t{7}};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int family = static_cast<int>(index % 4);
    const double a = 0.3 + 1.5 * u(rng), c = 0.5 * u(rng), th = 6.283185307179586 * u(rng);
    std::vector<cplx> v(r.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (family == 0) v[k] = std::exp(-std::pow(r[k] / a, 2));
      else if (family == 1) v[k] = std::max(0.0, 1.0 - std::pow(r[k] / (2 * a), 2));
      else if (family == 2) v[k] = gs.profile.values()[k] * (1.0 + c * std::cos(a * r[k] + th) * std::exp(-r[k]));
      else v[k] = gs.profile.values()[k] * std::polar(1.0, c * std::cos(a * r[k] + th));
    }
    const double mu = std::pow(target / model.Lp1(v), 1.0 / (p + 1));
    for (auto& x : v) x *= mu;
    reps[index] = model.report(v);
  });
  CompetitorSweep out;
  out.samples = samples;
  out.min_K = std::numeric_limits<double>::infinity();
  out.min_action_gap = std::numeric_limits<double>::infinity();
  const double eps = tol * std::max(1.0, std::abs(gs.report.S));
  for (const auto& rv : reps) {
    out.min_K = std::min(out.min_K, rv.K);
    out.min_action_gap = std::min(out.min_action_gap, rv.S - gs.report.S);
    if (rv.K < -eps) ++out.K_violations;
    if (rv.S < gs.report.S - eps) ++out.action_violations;
  }
  return out;
}

// ---------------------------------------------------------------- membership

SetMembership membership(const FunctionalReport& v, const GroundState& gs) {
  const auto& phi = gs.report;
  SetMembership m;
  m.action_margin = phi.S - v.S;
  m.mass_margin = phi.mass - v.mass;
  m.lp1_margin = v.Lp1 - phi.Lp1;
  m.q_margin = -v.Q;
  m.in_A = m.action_margin > 0 && m.mass_margin >= -kSlack * phi.mass && m.lp1_margin > 0;
  m.in_B = m.in_A && m.q_margin > 0;
  return m;
}

SetMembership membership(const Profile& v, const GroundState& gs) {
  return membership(eval_report(v, gs.params), gs);
}

// ---------------------------------------------------------- scaling family

ScalingFamilyReport check_scaling_family(const GroundState& gs, std::span<const double> lambdas) {
  const auto c = action_curve(gs.report, gs.params);
  ScalingFamilyReport rep;
  rep.S2_at_1 = c.d2S(1.0);
  if (rep.S2_at_1 > 0) throw std::invalid_argument("check_scaling_family: S''(1) > 0");
  rep.coefficient_gap = c.alpha * (2 - c.alpha) * c.C - c.beta * (c.beta - 2) * c.D;
  std::string failures;
  for (double l : lambdas) {
    if (!(l > 1)) throw std::invalid_argument("check_scaling_family: lambda must exceed 1");
    ScalingPoint pt{l, c.S(l), c.dS(l), c.d2S(l), c.Q(l), c.dQ(l), membership(scale(gs.profile, l), gs), false};
    pt.ok = pt.S < c.S(1.0) && pt.dS < 0 && pt.d2S < rep.S2_at_1 && pt.Q < 0 && pt.dQ < 0 && pt.member.in_B;
    if (!pt.ok) failures += fmt(" lambda=%.6g (S=%.6g, Q=%.6g)", l, pt.S, pt.Q);
    rep.points.push_back(pt);
  }
  if (!failures.empty()) throw ProofViolation("scaling family:" + failures);
  return rep;
}

// ---------------------------------------------------------------- ω-scan

namespace {

ScanRow scan_point(const ModelParams& base, double omega, const GridFactory& grid_for, const ScanOptions& o) {
  ScanRow row;
  row.omega = omega;
  try {
    const auto grid = grid_for(omega);
    const auto gs = solve_ground_state(base.with_omega(omega), grid, default_initial_guess(grid, omega), o.method, o.solver);
    row.S = gs.report.S;
    row.E = gs.report.E;
    row.d = gs.d_omega;
    row.S2 = second_variation_at_1(gs);
    row.sign = row.S2 > 0 ? 1 : (row.S2 < 0 ? -1 : 0);
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

void locate_bracket(ScanResult& res) {
  res.bracketed = false;
  res.omega1_upper = std::numeric_limits<double>::quiet_NaN();
  const ScanRow* last_pos = nullptr;
  for (const auto& r : res.rows) {
    if (!r.ok) continue;
    if (r.S2 > 0) {
      last_pos = &r;
      continue;
    }
    if (std::isnan(res.omega1_upper)) res.omega1_upper = r.omega;
    if (last_pos && !res.bracketed) {
      res.bracketed = true;
      res.omega_pos = last_pos->omega;
      res.omega_nonpos = r.omega;
    }
  }
}

}  // namespace

ScanResult omega_scan(const ModelParams& base, std::span<const double> omegas, const GridFactory& grid_for,
                      const ScanOptions& options) {
  ScanResult res;
  res.rows.resize(omegas.size());
  parallel_for(omegas.size(), options.workers,
               [&](std::size_t i) { res.rows[i] = scan_point(base, omegas[i], grid_for, options); });
  auto by_omega = [](const ScanRow& a, const ScanRow& b) { return a.omega < b.omega; };
  std::sort(res.rows.begin(), res.rows.end(), by_omega);
  locate_bracket(res);
  for (int it = 0; it < options.refine && res.bracketed; ++it) {
    if (res.omega_nonpos - res.omega_pos <= options.refine_width) break;
    const double mid = 0.5 * (res.omega_pos + res.omega_nonpos);
    const auto row = scan_point(base, mid, grid_for, options);
    res.rows.insert(std::upper_bound(res.rows.begin(), res.rows.end(), row, by_omega), row);
    if (!row.ok) break;
    if (row.S2 > 0) res.omega_pos = mid;
    else res.omega_nonpos = mid;
  }
  if (res.bracketed) {
    const double lo = res.omega_pos, hi = res.omega_nonpos;
    locate_bracket(res);
    res.omega_pos = lo;
    res.omega_nonpos = hi;
  }
  return res;
}

}  // namespace nlsi
