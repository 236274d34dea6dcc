#include "nlsi/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>

namespace nlsi {

std::string to_string(BlowupKind k) {
  switch (k) {
    case BlowupKind::none: return "none";
    case BlowupKind::detected: return "detected";
    case BlowupKind::unresolved: return "unresolved";
  }
  return "?";
}

std::string to_string(TimeScheme s) { return s == TimeScheme::strang ? "strang" : "conservative"; }

TimeScheme scheme_from_string(const std::string& name) {
  if (name == "strang") return TimeScheme::strang;
  if (name == "conservative") return TimeScheme::conservative;
  throw std::invalid_argument("unknown time scheme '" + name + "'");
}

namespace {

struct Sample {
  double mass, energy, action, virial, Q, grad2;
  FunctionalReport full;
};

Sample measure(const DiscreteModel& m, std::span<const cplx> u, const SimulationOptions& o) {
  const auto& P = m.params();
  const double mass = m.mass(u), grad2 = m.grad2(u);
  const double G = o.potential_on ? m.G(u) : 0.0;
  const double lp = o.nonlinearity_on ? m.Lp1(u) : 0.0;
  Sample s;
  s.full = assemble_report(mass, grad2, G, lp, P);
  s.mass = mass;
  s.grad2 = grad2;
  s.energy = s.full.E;
  s.action = s.full.S;
  s.Q = s.full.Q;
  s.virial = m.variance(u);
  return s;
}

std::string describe(const Grid& g) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s N=%d R=%.17g M=%zu order=%d grade=%.17g", to_string(g.kind()).c_str(), g.dim(),
                g.radius(), g.size(), g.order(), g.grade());
  return buf;
}

}  // namespace

SimulationTrace simulate(const Profile& u0, const ModelParams& params, const SimulationOptions& o) {
  if (!(o.dt > 0) || !(o.t_max >= 0) || o.sample_every < 1) throw std::invalid_argument("simulate: bad time options");
  if (u0.is_zero()) throw std::invalid_argument("simulate: zero initial datum");
  const GridPtr grid = u0.grid_ptr();
  const DiscreteModel model(grid, params);
  const std::size_t n = grid->size();
  const bool pot = o.potential_on && params.gamma > 0;

  // Crank-Nicolson for W u_t = -i H u with H = K - P
  const auto& K = grid->stiffness();
  const auto& Pf = model.potential_form();
  const std::size_t bw = std::max(K.bandwidth(), pot ? Pf.bandwidth() : 0);
  SymBand<double> H(n, bw);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i >= K.bandwidth() ? i - K.bandwidth() : 0; j <= i; ++j) H.at(i, j) = K.at(i, j);
  if (pot)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i >= Pf.bandwidth() ? i - Pf.bandwidth() : 0; j <= i; ++j) H.at(i, j) -= Pf.at(i, j);
  const auto W = grid->weights();
  SymBand<cplx> rhs;
  std::unique_ptr<BandLDLT<cplx>> cn;
  auto factor = [&](double dt) {
    SymBand<cplx> lhs(n, bw);
    rhs = SymBand<cplx>(n, bw);
    const cplx half(0.0, 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i >= bw ? i - bw : 0; j <= i; ++j) {
        const double w = i == j ? W[i] : 0.0;
        lhs.at(i, j) = w + half * H.at(i, j);
        rhs.at(i, j) = w - half * H.at(i, j);
      }
    cn = std::make_unique<BandLDLT<cplx>>(std::move(lhs));
  };

  const double pm = 0.5 * (params.p - 1.0);
  auto rotate = [&](std::vector<cplx>& u, double tau) {
    if (!o.nonlinearity_on) return;
    for (std::size_t k = 0; k < n; ++k) {
      u[k] *= std::polar(1.0, tau * std::pow(std::norm(u[k]), pm));
    }
  };

  // discrete gradient of the nonlinear energy: (2/(p+1)) (b^q - a^q)/(b - a)
  const double q = 0.5 * (params.p + 1.0);
  const bool integer_q = q == std::floor(q) && q <= 16;
  auto dgrad = [&](double a, double b) {
    if (integer_q) {
      double acc = 0, bj = 1;
      for (int j = 0; j < static_cast<int>(q); ++j) {
        acc += bj * std::pow(a, q - 1 - j);
        bj *= b;
      }
      return 2 * acc / (params.p + 1);
    }
    if (a < b) std::swap(a, b);
    if (a == 0) return 0.0;
    const double r = b / a - 1;
    const double ratio = std::abs(r) < 1e-8 ? q * (1 + 0.5 * (q - 1) * r) : std::expm1(q * std::log1p(r)) / r;
    return 2 * std::pow(a, q - 1) * ratio / (params.p + 1);
  };
  std::vector<cplx> base(n), next(n), trial(n);
  auto conservative_step = [&](std::vector<cplx>& u, double h) {
    rhs.multiply<cplx>(u, base);
    next = u;
    const cplx ih(0.0, 0.5 * h);
    for (int it = 0; it < o.max_fixed_point; ++it) {
      for (std::size_t k = 0; k < n; ++k) {
        const double g = o.nonlinearity_on ? dgrad(std::norm(u[k]), std::norm(next[k])) : 0.0;
        trial[k] = base[k] + ih * W[k] * g * (next[k] + u[k]);
      }
      cn->solve_in_place<cplx>(trial);
      double diff = 0, size = 0;
      for (std::size_t k = 0; k < n; ++k) {
        diff = std::max(diff, std::abs(trial[k] - next[k]));
        size = std::max(size, std::abs(trial[k]));
      }
      next.swap(trial);
      if (diff <= o.fixed_point_tolerance * size) {
        u.swap(next);
        return true;
      }
    }
    return false;
  };
  auto core_nodes = [&](const std::vector<cplx>& u) {
    double peak = 0;
    for (const auto& x : u) peak = std::max(peak, std::norm(x));
    int c = 0;
    for (const auto& x : u) c += std::norm(x) >= 0.25 * peak;
    return c;
  };

  SimulationTrace tr;
  tr.dt = o.dt;
  tr.grid = describe(*grid);
  tr.blowup.concavity_bound = std::numeric_limits<double>::quiet_NaN();
  std::vector<cplx> u(u0.values().begin(), u0.values().end()), tmp(n);
  const Sample s0 = measure(model, u, o);
  if (o.reference) tr.blowup.concavity_bound = 16 * (s0.action - o.reference->report.S);

  auto record = [&](double t, const Sample& s) {
    tr.times.push_back(t);
    tr.mass.push_back(s.mass);
    tr.energy.push_back(s.energy);
    tr.action.push_back(s.action);
    tr.virial.push_back(s.virial);
    tr.Q.push_back(s.Q);
    tr.grad2.push_back(s.grad2);
    if (o.reference) tr.membership.push_back(membership(s.full, *o.reference));
  };
  record(0.0, s0);

  double dt = o.dt, t = 0.0;
  int level = 0;
  factor(dt);
  const long fixed_steps = std::lround(o.t_max / o.dt);
  long step = 0, since_sample = 0;
  while (o.adaptive ? t < o.t_max * (1 - 1e-14) : step < fixed_steps) {
    if (step >= o.max_steps) {
      tr.blowup.kind = BlowupKind::unresolved;
      tr.blowup.t_star = t;
      tr.blowup.criterion = "step budget exhausted";
      break;
    }
    double h = dt;
    const bool clip = o.adaptive && t + dt > o.t_max;
    if (clip) {
      h = o.t_max - t;
      factor(h);
    }
    if (o.scheme == TimeScheme::strang) {
      rotate(u, 0.5 * h);
      rhs.multiply<cplx>(u, tmp);
      cn->solve_in_place<cplx>(tmp);
      u.swap(tmp);
      rotate(u, 0.5 * h);
    } else if (!conservative_step(u, h)) {
      tr.blowup.kind = BlowupKind::unresolved;
      tr.blowup.t_star = t;
      tr.blowup.criterion = "fixed-point iteration did not converge";
      break;
    }
    ++step;
    t = o.adaptive ? t + h : step * o.dt;
    tr.steps = static_cast<int>(step);
    const bool last = o.adaptive ? clip || t >= o.t_max * (1 - 1e-14) : step == fixed_steps;
    if (++since_sample < o.sample_every && !last) continue;
    since_sample = 0;
    for (const auto& x : u)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
        tr.blowup.kind = BlowupKind::unresolved;
        tr.blowup.t_star = t;
        tr.blowup.criterion = "non-finite state";
        tr.final_state = Profile(grid, u);
        return tr;
      }
    const Sample s = measure(model, u, o);
    record(t, s);
    const auto v = detect_blowup(tr, o.blowup_factor);
    if (v.kind == BlowupKind::detected) {
      const double bound = tr.blowup.concavity_bound;
      tr.blowup = v;
      tr.blowup.concavity_bound = bound;
      break;
    }
    const double dm = std::abs(s.mass - s0.mass) / s0.mass;
    const double de = std::abs(s.energy - s0.energy) / std::max(std::abs(s0.energy), 1e-300);
    if (dm > o.drift_tolerance || de > o.drift_tolerance) {
      tr.blowup.kind = BlowupKind::unresolved;
      tr.blowup.t_star = t;
      char buf[160];
      std::snprintf(buf, sizeof buf, "resolution exhausted: mass drift %.3e, energy drift %.3e, grad2 ratio %.3e", dm, de,
                    s.grad2 / s0.grad2);
      tr.blowup.criterion = buf;
      break;
    }
    if (const int c = core_nodes(u); c < o.min_core_nodes) {
      tr.blowup.kind = BlowupKind::unresolved;
      tr.blowup.t_star = t;
      tr.blowup.criterion = "spatial resolution exhausted: " + std::to_string(c) + " nodes above half maximum";
      break;
    }
    if (o.adaptive) {
      int want = level;
      while (s.grad2 >= std::ldexp(s0.grad2, want + 1)) ++want;
      if (want != level) {
        level = want;
        dt = std::ldexp(o.dt, -level);
        factor(dt);
      }
    }
  }
  tr.final_state = Profile(grid, u);
  return tr;
}

BlowupVerdict detect_blowup(const SimulationTrace& tr, double factor) {
  BlowupVerdict v;
  v.concavity_bound = tr.blowup.concavity_bound;
  const std::size_t n = tr.times.size();
  if (n < 3 || !(tr.grad2.back() >= factor * tr.grad2.front())) return v;
  const double t0 = tr.times[n - 3], t1 = tr.times[n - 2], t2 = tr.times[n - 1];
  const double v0 = tr.virial[n - 3], v1 = tr.virial[n - 2], v2 = tr.virial[n - 1];
  // Newton form of the interpolating quadratic, expanded at t2
  const double d01 = (v1 - v0) / (t1 - t0), d12 = (v2 - v1) / (t2 - t1);
  const double c = 2 * (d12 - d01) / (t2 - t0);  // second derivative
  const double b = d12 + 0.5 * c * (t2 - t1);     // slope at t2
  double root = std::numeric_limits<double>::infinity();
  if (c != 0) {
    const double disc = b * b - 2 * c * v2;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      for (double s : {(-b - sq) / c, (-b + sq) / c})
        if (s > 0) root = std::min(root, s);
    }
  } else if (b < 0) {
    root = -v2 / b;
  }
  if (!std::isfinite(root)) return v;
  v.kind = BlowupKind::detected;
  v.t_star = t2;
  v.predicted_vanishing = t2 + root;
  char buf[200];
  std::snprintf(buf, sizeof buf, "grad2 grew by %.3e; virial extrapolates to zero at t = %.6g",
                tr.grad2.back() / tr.grad2.front(), t2 + root);
  v.criterion = buf;
  return v;
}

double virial_consistency(const SimulationTrace& tr, int first, int last) {
  const int n = static_cast<int>(tr.times.size());
  if (last < 0 || last >= n) last = n - 1;
  if (last - first < 2) throw std::invalid_argument("virial_consistency: need at least 3 samples");
  double err = 0, scale = 0;
  for (int i = first + 1; i < last; ++i) {
    const double hl = tr.times[i] - tr.times[i - 1], hr = tr.times[i + 1] - tr.times[i];
    const double d2 = 2 * ((tr.virial[i + 1] - tr.virial[i]) / hr - (tr.virial[i] - tr.virial[i - 1]) / hl) / (hl + hr);
    err = std::max(err, std::abs(d2 - 8 * tr.Q[i]));
    scale = std::max(scale, std::abs(8 * tr.Q[i]));
  }
  return scale > 0 ? err / scale : err;
}

double cutoff(double s) {
  if (s <= 1) return 1.0;
  if (s >= 2) return 0.0;
  const double a = std::exp(-1.0 / (2 - s)), b = std::exp(-1.0 / (s - 1));
  return a / (a + b);
}

Profile build_cutoff_data(const GroundState& gs, double lambda0, double M) {
  if (!(lambda0 >= 1) || !(M > 0)) throw std::invalid_argument("build_cutoff_data: need lambda0 >= 1 and M > 0");
  const Profile d = lambda0 == 1.0 ? gs.profile.untagged() : scale(gs.profile, lambda0);
  const auto r = d.grid().abs_nodes();
  std::vector<cplx> v(d.values().begin(), d.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= cutoff(r[k] / M);
  return Profile(d.grid_ptr(), std::move(v));
}

double profile_width(const Profile& v) {
  const auto w = v.grid().weights();
  const auto r = v.grid().abs_nodes();
  double m = 0, x2 = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = std::norm(v.values()[k]);
    m += w[k] * d;
    x2 += w[k] * r[k] * r[k] * d;
  }
  return std::sqrt(x2 / m);
}

InvarianceReport monitor_invariance(const SimulationTrace& tr, const GroundState& gs) {
  (void)gs;
  InvarianceReport rep;
  if (tr.membership.empty() || !tr.membership.front().in_B) return rep;
  rep.ran = true;
  rep.all_in_B = true;
  const auto inf = std::numeric_limits<double>::infinity();
  rep.min_action_margin = rep.min_mass_margin = rep.min_lp1_margin = rep.min_q_margin = inf;
  rep.max_second_difference = -inf;
  for (std::size_t i = 0; i < tr.membership.size(); ++i) {
    const auto& m = tr.membership[i];
    if (!m.in_B && rep.all_in_B) {
      rep.all_in_B = false;
      rep.first_exit = static_cast<int>(i);
    }
    rep.min_action_margin = std::min(rep.min_action_margin, m.action_margin);
    rep.min_mass_margin = std::min(rep.min_mass_margin, m.mass_margin);
    rep.min_lp1_margin = std::min(rep.min_lp1_margin, m.lp1_margin);
    rep.min_q_margin = std::min(rep.min_q_margin, m.q_margin);
    rep.max_action_drift =
        std::max(rep.max_action_drift, std::abs(tr.action[i] - tr.action[0]) / std::abs(tr.action[0]));
  }
  for (std::size_t i = 1; i + 1 < tr.times.size(); ++i) {
    const double hl = tr.times[i] - tr.times[i - 1], hr = tr.times[i + 1] - tr.times[i];
    const double d2 = 2 * ((tr.virial[i + 1] - tr.virial[i]) / hr - (tr.virial[i] - tr.virial[i - 1]) / hl) / (hl + hr);
    rep.max_second_difference = std::max(rep.max_second_difference, d2);
  }
  return rep;
}

void write_trace_csv(const SimulationTrace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,mass,energy,action,virial,Q,grad2,in_A,in_B\n";
  char buf[512];
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const int a = tr.membership.empty() ? -1 : tr.membership[i].in_A;
    const int b = tr.membership.empty() ? -1 : tr.membership[i].in_B;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", tr.times[i], tr.mass[i],
                  tr.energy[i], tr.action[i], tr.virial[i], tr.Q[i], tr.grad2[i], a, b);
    out << buf;
  }
}

}  // namespace nlsi
