#include "nlsi/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nlsi {

std::string to_string(GroundStateMethod m) {
  return m == GroundStateMethod::gradient_flow ? "gradient_flow" : "nehari_descent";
}

GroundStateMethod method_from_string(const std::string& name) {
  if (name == "gradient_flow") return GroundStateMethod::gradient_flow;
  if (name == "nehari_descent") return GroundStateMethod::nehari_descent;
  throw std::invalid_argument("unknown ground-state method: " + name);
}

namespace {

double wdot(std::span<const double> w, std::span<const cplx> a, std::span<const cplx> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += w[k] * std::real(std::conj(a[k]) * b[k]);
  return acc;
}

double quad_form(const SymBand<double>& a, std::span<const cplx> v) {
  std::vector<cplx> av(v.size());
  a.multiply<cplx>(v, av);
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += std::real(std::conj(v[k]) * av[k]);
  return acc;
}

SymBand<double> shifted(const SymBand<double>& a, std::span<const double> w, double sigma) {
  SymBand<double> m = a;
  for (std::size_t k = 0; k < m.size(); ++k) m.at(k, k) -= sigma * w[k];
  return m;
}

// number of generalized eigenvalues of (a, W) below sigma
std::size_t count_below(const SymBand<double>& a, std::span<const double> w, double sigma) {
  for (int tries = 0;; ++tries) {
    try {
      return BandLDLT<double>(shifted(a, w, sigma)).negative_pivots();
    } catch (const std::runtime_error&) {
      if (tries > 4) throw;
      sigma += 1e-14 * std::max(1.0, std::abs(sigma));
    }
  }
}

std::vector<cplx> nonlinear_term(std::span<const cplx> v, double p) {
  const double e = 0.5 * (p - 1.0);
  std::vector<cplx> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::pow(std::norm(v[k]), e) * v[k];
  return out;
}

}  // namespace

SpectralEstimate estimate_omega0(const ModelParams& params, const GridPtr& grid) {
  params.validate();
  const DiscreteModel model(grid, params);
  const auto w = grid->weights();
  const SymBand<double> a = model.linear_operator(0.0);
  SpectralEstimate out;

  double lo = -1.0;
  while (count_below(a, w, lo) > 0) lo *= 2.0, ++out.iterations;
  double hi = 0.0;
  if (count_below(a, w, hi) == 0) {
    hi = 1.0 / (grid->radius() * grid->radius());
    while (count_below(a, w, hi) == 0) hi *= 2.0, ++out.iterations;
    lo = 0.0;
  }
  while (hi - lo > 1e-14 * std::max(1.0, std::abs(hi)) && out.iterations < 400) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (count_below(a, w, mid) == 0 ? lo : hi) = mid;
    ++out.iterations;
  }
  out.lambda_min = 0.5 * (lo + hi);

  // eigenvector by inverse iteration just below lambda_min
  const double sigma = lo - 1e-9 * std::max(1.0, std::abs(lo));
  const BandLDLT<double> f(shifted(a, w, sigma));
  const std::size_t n = grid->size();
  std::vector<cplx> v(n);
  const auto r = grid->abs_nodes();
  for (std::size_t k = 0; k < n; ++k) v[k] = std::exp(-r[k]);
  double rq = 0.0, prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    std::vector<cplx> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = w[k] * v[k];
    f.solve_in_place<cplx>(y);
    const double nrm = std::sqrt(wdot(w, y, y));
    for (std::size_t k = 0; k < n; ++k) v[k] = y[k] / nrm;
    rq = quad_form(a, v);
    ++out.iterations;
    if (std::abs(rq - prev) <= 1e-15 * std::max(1.0, std::abs(rq))) break;
    prev = rq;
  }
  if (std::real(v[0]) < 0)
    for (auto& x : v) x = -x;
  out.rayleigh = rq;
  out.rayleigh_minimizer = Profile(grid, std::move(v));
  out.converged = std::abs(rq - out.lambda_min) <= 1e-8 * std::max(1.0, std::abs(out.lambda_min));
  out.box_limited = out.lambda_min >= 0.0;
  out.omega0 = std::max(0.0, -out.lambda_min);
  return out;
}

double omega0_margin(double omega0) { return 1e-3 * std::max(1.0, std::abs(omega0)); }

Profile default_initial_guess(const GridPtr& grid, double omega) {
  return Profile::sample(grid, GaussianTag{1.0 / std::sqrt(omega), 1.0}).untagged();
}

namespace {

struct SolveState {
  const DiscreteModel& model;
  SymBand<double> A;
  std::vector<double> w;
  double p;

  std::vector<cplx> project(std::vector<cplx> v) const {
    const double L = quad_form(A, v);
    const double lp = model.Lp1(v);
    if (!(L > 0.0) || !(lp > 0.0) || !std::isfinite(L)) throw SolverError("ground state: iterate left the admissible set");
    const double mu = std::pow(L / lp, 1.0 / (p - 1.0));
    for (auto& x : v) x *= mu;
    return v;
  }

  double residual(std::span<const cplx> v) const {
    const auto g = model.action_gradient(v);
    return std::sqrt(wdot(w, g, g) / wdot(w, v, v));
  }
};

void check_collapse(std::span<const cplx> v, const SolveState& st, double mass0) {
  const double m = st.model.mass(v);
  if (!std::isfinite(m)) throw SolverError("ground state: divergence");
  if (m < 1e-10 * mass0) throw SolverError("ground state: collapse to zero (initialization left the basin)");
}

}  // namespace

GroundState solve_ground_state(const ModelParams& params, const GridPtr& grid, const Profile& init,
                               GroundStateMethod method, const SolverOptions& options) {
  params.validate();
  if (init.is_zero()) throw std::invalid_argument("solve_ground_state: zero initial profile");
  if (&init.grid() != grid.get()) throw std::invalid_argument("solve_ground_state: initial profile on another grid");
  const DiscreteModel model(grid, params);
  GroundState gs;
  gs.params = params;
  gs.method = method;
  if (options.certify_omega0) {
    gs.omega0 = estimate_omega0(params, grid).omega0;
    if (params.omega < gs.omega0 + omega0_margin(gs.omega0))
      throw NotAdmissible("solve_ground_state: omega is not certified above omega0");
  }

  SolveState st{model, model.linear_operator(params.omega), {}, params.p};
  st.w.assign(grid->weights().begin(), grid->weights().end());
  const std::size_t n = grid->size();
  const auto& w = st.w;

  std::vector<cplx> v(init.values().begin(), init.values().end());
  for (auto& x : v) x = std::abs(x);
  v = st.project(std::move(v));
  const double mass0 = model.mass(v);
  double S = model.report(v).S;
  double res = st.residual(v);
  int it = 0;
  double best = res, kept = res;
  int best_it = 0;
  std::vector<cplx> vbest = v;
  bool floor_hit = false;
  auto running = [&] {
    if (res < kept) kept = res, vbest = v;
    if (res < 0.9 * best) best = res, best_it = it;
    if (floor_hit || res <= options.tolerance || it >= options.max_iterations) return false;
    return !(best <= options.acceptable && it - best_it >= options.stagnation_window);
  };

  if (method == GroundStateMethod::gradient_flow) {
    double tau = options.flow_step;
    while (running()) {
      ++it;
      SymBand<double> m = st.A;
      for (std::size_t k = 0; k < n; ++k) m.at(k, k) += w[k] / tau;
      const BandLDLT<double> f(std::move(m));
      const auto nl = nonlinear_term(v, params.p);
      std::vector<cplx> y(n);
      for (std::size_t k = 0; k < n; ++k) y[k] = w[k] * (v[k] / tau + nl[k]);
      f.solve_in_place<cplx>(y);
      std::vector<cplx> trial;
      bool ok = true;
      try {
        check_collapse(y, st, mass0);
        trial = st.project(std::move(y));
      } catch (const SolverError&) {
        ok = false;
      }
      const double s_new = ok ? model.report(trial).S : 0.0;
      if (!ok || !std::isfinite(s_new) || s_new > S + 1e-12 * std::abs(S)) {
        tau *= 0.5;
        if (tau < options.min_step) {
          if (!(kept <= options.acceptable)) throw SolverError("ground state: flow step fell below the floor");
          floor_hit = true;
        }
        continue;
      }
      v = std::move(trial);
      S = s_new;
      res = st.residual(v);
      if (!std::isfinite(res)) throw SolverError("ground state: divergence");
    }
  } else {
    // descent of ln J, J = L^{(p+1)/(p-1)} / Lp1^{2/(p-1)}, preconditioned by A^{-1}
    const BandLDLT<double> f(st.A);
    const double p = params.p;
    const double c1 = (p + 1.0) / (p - 1.0), c2 = 2.0 / (p - 1.0);
    auto logJ = [&](std::span<const cplx> u) { return c1 * std::log(quad_form(st.A, u)) - c2 * std::log(model.Lp1(u)); };
    double step = 1.0;
    double J = logJ(v);
    while (running()) {
      ++it;
      const double L = quad_form(st.A, v), lp = model.Lp1(v);
      const auto nl = nonlinear_term(v, p);
      std::vector<cplx> z(n);
      for (std::size_t k = 0; k < n; ++k) z[k] = w[k] * nl[k];
      f.solve_in_place<cplx>(z);
      // preconditioned gradient of ln J: 2 c1 (v / L - A^{-1} W n / Lp1)
      std::vector<cplx> d(n);
      for (std::size_t k = 0; k < n; ++k) d[k] = -2.0 * c1 * (v[k] / L - z[k] / lp);
      // slope in the A inner product
      std::vector<cplx> ad(n);
      st.A.multiply<cplx>(d, ad);
      std::vector<cplx> gv(n);
      for (std::size_t k = 0; k < n; ++k) gv[k] = -d[k];
      double slope = 0.0;
      for (std::size_t k = 0; k < n; ++k) slope += std::real(std::conj(gv[k]) * ad[k]);
      const double scale = L / (2.0 * c1);  // step 1 moves v to its fixed-point image
      bool accepted = false;
      while (!accepted && !floor_hit) {
        std::vector<cplx> trial(n);
        for (std::size_t k = 0; k < n; ++k) trial[k] = v[k] + step * scale * d[k];
        double jt = std::numeric_limits<double>::infinity();
        try {
          check_collapse(trial, st, mass0);
          trial = st.project(std::move(trial));
          jt = logJ(trial);
        } catch (const SolverError&) {
        }
        // below the roundoff level of J the residual decides
        bool good = std::isfinite(jt) && jt <= J + 1e-4 * step * scale * slope;
        if (!good && std::isfinite(jt) && std::abs(jt - J) <= 1e-10 * std::abs(J)) good = st.residual(trial) < res;
        if (good) {
          v = std::move(trial);
          J = jt;
          accepted = true;
          step = std::min(2.0 * step, 1.0);
        } else {
          step *= 0.5;
          if (step < options.min_step) {
            if (!(kept <= options.acceptable)) throw SolverError("ground state: descent step fell below the floor");
            floor_hit = true;
          }
        }
      }
      res = st.residual(v);
      if (!std::isfinite(res)) throw SolverError("ground state: divergence");
    }
  }
  running();
  if (!(kept <= options.acceptable)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "ground state: no convergence after %d iterations (residual %.3e)", it, kept);
    throw SolverError(msg);
  }

  gs.profile = Profile(grid, std::move(vbest));
  gs.residual = kept;
  gs.report = model.report(gs.profile.values());
  gs.d_omega = gs.report.S;
  gs.iterations = it;
  return gs;
}

VariationalLevels compute_d(const FunctionalReport& r, const ModelParams& params) {
  const double c = (params.p - 1.0) / (2.0 * (params.p + 1.0));
  VariationalLevels d{r.S, c * r.Lp1, c * r.L_omega, 0.0};
  const double ref = std::abs(d.d1);
  d.max_relative_gap = std::max({std::abs(d.d1 - d.d2), std::abs(d.d1 - d.d3), std::abs(d.d2 - d.d3)}) / ref;
  return d;
}

VariationalLevels compute_d(const GroundState& gs) {
  const auto d = compute_d(gs.report, gs.params);
  if (!(d.max_relative_gap <= 1e-8))
    throw SolverError("compute_d: levels disagree (K_omega(phi) != 0), gap " + std::to_string(d.max_relative_gap));
  return d;
}

namespace {

struct OdeState {
  double phi, dphi, m, g, q;
};

OdeState ode_rhs(const OdeState& y, double omega, double p) {
  const double a = std::abs(y.phi);
  const double ap = std::pow(a, p - 1.0);
  return {y.dphi, omega * y.phi - ap * y.phi, y.phi * y.phi, y.dphi * y.dphi, ap * a * a};
}

OdeState axpy(const OdeState& y, double h, const OdeState& k) {
  return {y.phi + h * k.phi, y.dphi + h * k.dphi, y.m + h * k.m, y.g + h * k.g, y.q + h * k.q};
}

OdeState rk4(const OdeState& y, double h, double omega, double p) {
  const auto k1 = ode_rhs(y, omega, p);
  const auto k2 = ode_rhs(axpy(y, 0.5 * h, k1), omega, p);
  const auto k3 = ode_rhs(axpy(y, 0.5 * h, k2), omega, p);
  const auto k4 = ode_rhs(axpy(y, h, k3), omega, p);
  return {y.phi + h / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi),
          y.dphi + h / 6 * (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi),
          y.m + h / 6 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m), y.g + h / 6 * (k1.g + 2 * k2.g + 2 * k3.g + k4.g),
          y.q + h / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q)};
}

// +1: crosses zero (too high), -1: turns back up (too low), 0: undecided
int classify(double a, double slope_ratio, double omega, double p, double dx, double xmax) {
  OdeState y{a, -slope_ratio * a, 0, 0, 0};
  for (double x = 0; x < xmax; x += dx) {
    y = rk4(y, dx, omega, p);
    if (y.phi < 0) return 1;
    if (y.dphi > 0) return -1;
  }
  return 0;
}

}  // namespace

ShootingSoliton shoot_soliton(double omega, double p, double delta_gamma, const GridPtr& grid) {
  if (grid->dim() != 1) throw std::invalid_argument("shoot_soliton: one-dimensional grids only");
  if (!(omega > 0.25 * delta_gamma * delta_gamma) || !(p > 1.0))
    throw std::invalid_argument("shoot_soliton: need omega > gamma^2/4 and p > 1");
  const double slope = 0.5 * delta_gamma;
  const double k = 0.5 * (p - 1.0) * std::sqrt(omega);
  const double dx = 1e-3 / k;
  const double xmax = 60.0 / std::sqrt(omega);

  ShootingSoliton out;
  double lo = 1e-3 * std::pow(omega, 1.0 / (p - 1.0)), hi = 2.0 * lo;
  int widen = 0;
  while (classify(hi, slope, omega, p, dx, xmax) <= 0) {
    hi *= 2.0;
    if (++widen > 60) throw std::runtime_error("shoot_soliton: bracket failure");
  }
  while (classify(lo, slope, omega, p, dx, xmax) >= 0) {
    lo *= 0.5;
    if (++widen > 120) throw std::runtime_error("shoot_soliton: bracket failure");
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int c = classify(mid, slope, omega, p, dx, xmax);
    ++out.bisections;
    if (c == 0) {
      lo = hi = mid;
      break;
    }
    (c > 0 ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);
  out.phi0 = a;

  // outward integration to the matching point, then exponential tail; nodes
  // inside a step are reached by a partial step
  const double sw = std::sqrt(omega);
  const double cut = 1e-3 * a;
  const auto r = grid->abs_nodes();
  std::vector<std::size_t> order(r.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return r[i] < r[j]; });
  std::vector<cplx> vals(grid->size());
  std::size_t next = 0;
  OdeState y{a, -slope * a, 0, 0, 0};
  double x = 0.0;
  while (y.phi > cut) {
    while (next < order.size() && r[order[next]] <= x + dx) {
      const double t = r[order[next]] - x;
      vals[order[next]] = t > 0.0 ? rk4(y, t, omega, p).phi : y.phi;
      ++next;
    }
    y = rk4(y, dx, omega, p);
    x += dx;
    if (y.dphi > 0 || y.phi < 0) throw std::runtime_error("shoot_soliton: trajectory lost before matching point");
  }
  const double xs = x, phis = y.phi;
  out.mass = 2.0 * (y.m + phis * phis / (2.0 * sw));
  out.grad2 = 2.0 * (y.g + sw * phis * phis / 2.0);
  out.Lp1 = 2.0 * (y.q + std::pow(phis, p + 1.0) / ((p + 1.0) * sw));
  out.G = delta_gamma * a * a;
  out.S = 0.5 * out.grad2 - 0.5 * out.G + 0.5 * omega * out.mass - out.Lp1 / (p + 1.0);
  for (; next < order.size(); ++next) vals[order[next]] = phis * std::exp(-sw * (r[order[next]] - xs));
  out.profile = Profile(grid, std::move(vals));
  return out;
}

ShootingSoliton reference_soliton_gamma0(double omega, double p, const GridPtr& grid) {
  return shoot_soliton(omega, p, 0.0, grid);
}

namespace {

nlohmann::json report_json(const FunctionalReport& r) {
  return {{"mass", r.mass}, {"grad2", r.grad2}, {"G", r.G}, {"Lp1", r.Lp1}, {"L_omega", r.L_omega},
          {"E", r.E},       {"S", r.S},         {"K", r.K}, {"Q", r.Q}};
}

}  // namespace

void save_ground_state(const GroundState& gs, const std::string& csv_path, const std::string& json_path) {
  const Grid& g = gs.profile.grid();
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << "node,re,im\n";
    char buf[128];
    const auto v = gs.profile.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.nodes()[k], v[k].real(), v[k].imag());
      csv << buf;
    }
  }
  const auto& p = gs.params;
  nlohmann::json j = {
      {"params",
       {{"N", p.N}, {"gamma", p.gamma}, {"alpha", p.alpha}, {"p", p.p}, {"omega", p.omega}, {"kind", to_string(p.kind)}}},
      {"grid", {{"kind", to_string(g.kind())}, {"N", g.dim()}, {"R", g.radius()}, {"M", g.size()}, {"order", g.order()}, {"grade", g.grade()}}},
      {"report", report_json(gs.report)},
      {"residual", gs.residual},
      {"d_omega", gs.d_omega},
      {"method", to_string(gs.method)},
      {"iterations", gs.iterations},
      {"omega0", gs.omega0}};
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << j.dump(2) << "\n";
}

GroundState load_ground_state(const std::string& csv_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot read " + json_path);
  const auto j = nlohmann::json::parse(js);
  GroundState gs;
  const auto& jp = j.at("params");
  gs.params.N = jp.at("N");
  gs.params.gamma = jp.at("gamma");
  gs.params.alpha = jp.at("alpha");
  gs.params.p = jp.at("p");
  gs.params.omega = jp.at("omega");
  gs.params.kind = potential_kind_from_string(jp.at("kind"));
  const auto& jg = j.at("grid");
  const auto grid = build_grid(grid_kind_from_string(jg.at("kind")), jg.at("N"), jg.at("R"),
                               jg.at("M").get<std::size_t>(), jg.at("order"), jg.value("grade", 0.0));
  const auto& jr = j.at("report");
  gs.report.mass = jr.at("mass");
  gs.report.grad2 = jr.at("grad2");
  gs.report.G = jr.at("G");
  gs.report.Lp1 = jr.at("Lp1");
  gs.report.L_omega = jr.at("L_omega");
  gs.report.E = jr.at("E");
  gs.report.S = jr.at("S");
  gs.report.K = jr.at("K");
  gs.report.Q = jr.at("Q");
  gs.residual = j.at("residual");
  gs.d_omega = j.at("d_omega");
  gs.method = method_from_string(j.at("method"));
  gs.iterations = j.at("iterations");
  gs.omega0 = j.at("omega0");

  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot read " + csv_path);
  std::string line;
  std::getline(csv, line);
  std::vector<cplx> vals;
  vals.reserve(grid->size());
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    std::strtod(s, &end);
    const double re = std::strtod(end + 1, &end);
    const double im = std::strtod(end + 1, &end);
    vals.emplace_back(re, im);
  }
  if (vals.size() != grid->size()) throw std::runtime_error("load_ground_state: node count mismatch");
  gs.profile = Profile(grid, std::move(vals));
  return gs;
}

}  // namespace nlsi
