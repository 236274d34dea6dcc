#include "nlsi/functionals.hpp"

#include <cmath>
#include <numbers>

namespace nlsi {

namespace {

double beta_fn(double a, double b) { return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)); }

SymBand<double> widen(const SymBand<double>& m, std::size_t bw) {
  SymBand<double> out(m.size(), bw);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::size_t j0 = i >= m.bandwidth() ? i - m.bandwidth() : 0;
    for (std::size_t j = j0; j <= i; ++j) out.at(i, j) = m.at(i, j);
  }
  return out;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string("non-finite ") + what + " (grid or singularity misconfigured)");
}

double grid_mass(const Grid& g, std::span<const cplx> v) {
  const auto w = g.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += w[k] * std::norm(v[k]);
  require_finite(acc, "mass");
  return acc;
}

double grid_grad2(const Grid& g, std::span<const cplx> v) {
  std::vector<cplx> dv(g.staggered_size());
  g.derivative(v, dv);
  const auto w = g.staggered_weights();
  double acc = 0.0;
  for (std::size_t j = 0; j < dv.size(); ++j) acc += w[j] * std::norm(dv[j]);
  require_finite(acc, "gradient norm");
  return acc;
}

}  // namespace

FunctionalReport assemble_report(double mass, double grad2, double G, double Lp1, const ModelParams& params) {
  FunctionalReport r;
  r.mass = mass;
  r.grad2 = grad2;
  r.G = G;
  r.Lp1 = Lp1;
  const double p = params.p, w = params.omega;
  r.L_omega = grad2 + w * mass - G;
  r.E = 0.5 * grad2 - 0.5 * G - Lp1 / (p + 1.0);
  r.S = r.E + 0.5 * w * mass;
  r.K = r.L_omega - Lp1;
  r.Q = grad2 - 0.5 * params.alpha * G - params.beta() / (p + 1.0) * Lp1;
  return r;
}

DiscreteModel::DiscreteModel(GridPtr grid, ModelParams params) : grid_(std::move(grid)), params_(params) {
  params_.validate();
  const Grid& g = *grid_;
  if (g.dim() != params_.N) throw std::invalid_argument("DiscreteModel: grid dimension differs from N");
  const std::size_t n = g.size();
  std::size_t bw = g.stiffness().bandwidth();
  if (params_.kind == PotentialKind::delta) {
    const auto c = g.origin_stencil(true);
    std::size_t lo = n, hi = 0;
    for (auto [k, _] : c) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    bw = std::max(bw, hi - lo);
    potential_ = SymBand<double>(n, bw);
    for (auto [i, ci] : c)
      for (auto [j, cj] : c)
        if (i >= j) potential_.at(i, j) += params_.gamma * ci * cj;
  } else {
    potential_ = SymBand<double>(n, bw);
    if (params_.gamma > 0.0) {
      gweights_ = g.singular_weights(params_.alpha);
      vdiag_.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        potential_.at(k, k) = params_.gamma * gweights_[k];
        vdiag_[k] = params_.gamma * gweights_[k] / g.weights()[k];
      }
    } else {
      vdiag_.assign(n, 0.0);
    }
  }
}

double DiscreteModel::mass(std::span<const cplx> v) const { return grid_mass(*grid_, v); }

double DiscreteModel::grad2(std::span<const cplx> v) const { return grid_grad2(*grid_, v); }

double DiscreteModel::G(std::span<const cplx> v) const {
  if (params_.gamma == 0.0) return 0.0;
  double acc = 0.0;
  if (params_.kind == PotentialKind::delta) {
    cplx v0{};
    for (auto [k, c] : grid_->origin_stencil(true)) v0 += c * v[k];
    acc = params_.gamma * std::norm(v0);
  } else {
    for (std::size_t k = 0; k < v.size(); ++k) acc += params_.gamma * gweights_[k] * std::norm(v[k]);
  }
  require_finite(acc, "potential term");
  return acc;
}

double DiscreteModel::Lp1(std::span<const cplx> v) const {
  const auto w = grid_->weights();
  const double e = 0.5 * (params_.p + 1.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += w[k] * std::pow(std::norm(v[k]), e);
  require_finite(acc, "L^{p+1} norm");
  return acc;
}

double DiscreteModel::variance(std::span<const cplx> v) const {
  const auto w = grid_->weights();
  const auto r = grid_->abs_nodes();
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += w[k] * r[k] * r[k] * std::norm(v[k]);
  require_finite(acc, "variance");
  return acc;
}

FunctionalReport DiscreteModel::report(std::span<const cplx> v) const {
  return assemble_report(mass(v), grad2(v), G(v), Lp1(v), params_);
}

std::vector<cplx> DiscreteModel::action_gradient(std::span<const cplx> v) const {
  const std::size_t n = v.size();
  std::vector<cplx> kv(n), pv(n);
  grid_->stiffness().multiply<cplx>(v, kv);
  potential_.multiply<cplx>(v, pv);
  const auto w = grid_->weights();
  const double pm = 0.5 * (params_.p - 1.0);
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = (kv[k] - pv[k]) / w[k] + params_.omega * v[k] - std::pow(std::norm(v[k]), pm) * v[k];
  return out;
}

SymBand<double> DiscreteModel::linear_operator(double omega) const {
  SymBand<double> a = widen(grid_->stiffness(), potential_.bandwidth());
  a = a.combine<double>(1.0, potential_, -1.0);
  const auto w = grid_->weights();
  for (std::size_t k = 0; k < a.size(); ++k) a.at(k, k) += omega * w[k];
  return a;
}

namespace {

struct ClosedForm {
  std::optional<double> mass, grad2, G, Lp1;
};

ClosedForm closed_form(const Profile& v, const ModelParams& params) {
  ClosedForm cf;
  const int N = params.N;
  const double p = params.p;
  if (const auto* g = std::get_if<GaussianTag>(&v.tag())) {
    const double A2 = g->amplitude * g->amplitude, w2 = g->width * g->width;
    const double base = std::pow(std::numbers::pi * w2 / 2.0, 0.5 * N);
    cf.mass = A2 * base;
    cf.grad2 = A2 * N / w2 * base;
    cf.Lp1 = std::pow(std::abs(g->amplitude), p + 1.0) * std::pow(std::numbers::pi * w2 / (p + 1.0), 0.5 * N);
    if (params.gamma == 0.0) {
      cf.G = 0.0;
    } else if (params.kind == PotentialKind::delta) {
      cf.G = params.gamma * A2;
    } else {
      const double a = params.alpha;
      cf.G = params.gamma * A2 * sphere_area(N) * 0.5 * std::tgamma(0.5 * (N - a)) * std::pow(0.5 * w2, 0.5 * (N - a));
    }
  } else if (const auto* s = std::get_if<SechPowerTag>(&v.tag())) {
    if (N == 1) {
      const double k = s->scale, m = s->exponent, A = s->amplitude;
      auto I = [k](double q) { return beta_fn(0.5 * q, 0.5) / k; };
      cf.mass = A * A * I(2 * m);
      cf.grad2 = A * A * m * m * k * k * (I(2 * m) - I(2 * m + 2));
      cf.Lp1 = std::pow(std::abs(A), p + 1.0) * I((p + 1.0) * m);
      if (params.gamma == 0.0) cf.G = 0.0;
      else if (params.kind == PotentialKind::delta) cf.G = params.gamma * A * A;
    }
  }
  return cf;
}

}  // namespace

FunctionalReport eval_report(const Profile& v, const DiscreteModel& model) {
  if (v.grid_ptr() != model.grid_ptr() && &v.grid() != &model.grid())
    throw std::invalid_argument("eval_report: profile and model on different grids");
  const auto vals = v.values();
  if (!v.tagged()) return model.report(vals);
  const auto cf = closed_form(v, model.params());
  return assemble_report(cf.mass ? *cf.mass : model.mass(vals), cf.grad2 ? *cf.grad2 : model.grad2(vals),
                         cf.G ? *cf.G : model.G(vals), cf.Lp1 ? *cf.Lp1 : model.Lp1(vals), model.params());
}

FunctionalReport eval_report(const Profile& v, const ModelParams& params) {
  return eval_report(v, DiscreteModel(v.grid_ptr(), params));
}

double eval_G(const Profile& v, const ModelParams& params) {
  params.validate();
  if (v.tagged()) {
    const auto cf = closed_form(v, params);
    if (cf.G) return *cf.G;
  }
  return DiscreteModel(v.grid_ptr(), params).G(v.values());
}

Profile scale(const Profile& v, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("scale: lambda must be > 0");
  const Grid& g = v.grid();
  const int N = g.dim();
  const double amp = std::pow(lambda, 0.5 * N);
  AnalyticTag tag = v.tag();
  if (auto* gt = std::get_if<GaussianTag>(&tag)) {
    gt->width /= lambda;
    gt->amplitude *= amp;
    return Profile::sample(v.grid_ptr(), tag);
  }
  if (auto* st = std::get_if<SechPowerTag>(&tag)) {
    st->scale *= lambda;
    st->amplitude *= amp;
    return Profile::sample(v.grid_ptr(), tag);
  }
  if (v.is_zero()) return v;
  // resolution check on the rms width sqrt(mass/grad2)
  const double width = std::sqrt(grid_mass(g, v.values()) / std::max(grid_grad2(g, v.values()), 1e-300));
  if (width / lambda < 4.0 * g.spacing())
    throw ResolutionError("scale: dilated profile falls below grid resolution");
  std::vector<cplx> out(v.size());
  const auto x = g.nodes();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = amp * interpolate(v, lambda * x[k]);
  return Profile(v.grid_ptr(), std::move(out));
}

NehariProjection nehari_project(const Profile& v, const DiscreteModel& model) {
  if (v.is_zero()) throw std::invalid_argument("nehari_project: zero profile");
  const auto r = eval_report(v, model);
  if (!(r.L_omega > 0.0)) throw NotAdmissible("nehari_project: L_omega(v) <= 0 (omega <= omega0 or discretization failure)");
  const double lambda1 = std::pow(r.L_omega / r.Lp1, 1.0 / (model.params().p - 1.0));
  return {lambda1, amplitude_scale(v, lambda1)};
}

NehariProjection nehari_project(const Profile& v, const ModelParams& params) {
  return nehari_project(v, DiscreteModel(v.grid_ptr(), params));
}

double residual_stationary(const Profile& phi, const DiscreteModel& model) {
  if (phi.is_zero()) throw std::invalid_argument("residual_stationary: zero profile");
  const auto res = model.action_gradient(phi.values());
  const auto w = model.grid().weights();
  double num = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) num += w[k] * std::norm(res[k]);
  const double den = model.mass(phi.values());
  const double out = std::sqrt(num / den);
  require_finite(out, "stationary residual");
  return out;
}

double residual_stationary(const Profile& phi, const ModelParams& params) {
  return residual_stationary(phi, DiscreteModel(phi.grid_ptr(), params));
}

}  // namespace nlsi
