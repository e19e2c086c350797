#include "syncot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "syncot/error.hpp"

namespace syncot {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::chambolle_pock: return "chambolle_pock";
    case Algorithm::condat_vu: return "condat_vu";
    case Algorithm::pdfp: return "pdfp";
    case Algorithm::yan: return "yan";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::chambolle_pock, Algorithm::condat_vu, Algorithm::pdfp, Algorithm::yan}) {
    if (s == to_string(a)) return a;
  }
  if (s == "cp") return Algorithm::chambolle_pock;
  throw ConfigError("unknown algorithm '" + s + "'");
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::error: return "error";
  }
  return "?";
}

StepSizes auto_step_sizes(const GridSpec&, Algorithm alg, double norm_est, double beta_inv) {
  if (!(norm_est > 0.0)) throw ConfigError("operator norm estimate must be positive");
  if (beta_inv < 0.0) throw ConfigError("Lipschitz estimate must be nonnegative");
  StepSizes s;
  if (alg == Algorithm::chambolle_pock) {
    s.tau = s.sigma = 0.99 / norm_est;
    return s;
  }
  const double n2 = norm_est * norm_est;
  double gamma = 1.0;
  if (alg == Algorithm::condat_vu) {
    // gamma delta |I|^2 + gamma / (2 beta) <= 0.98 needs gamma / (2 beta) well
    // below the margin to leave room for delta.
    while (0.5 * gamma * beta_inv > 0.49) gamma *= 0.5;
    s.sigma = gamma;
    s.tau = (0.98 - 0.5 * gamma * beta_inv) / (gamma * n2);
  } else {
    while (0.5 * gamma * beta_inv >= 0.98) gamma *= 0.5;
    s.sigma = gamma;
    s.tau = 0.98 / (gamma * n2);
  }
  return s;
}

bool stopping_check(const ConvergenceReport& report, int window, double tol) {
  if (window < 1 || report.rows.size() <= static_cast<std::size_t>(window)) return false;
  const ReportRow& now = report.rows.back();
  const ReportRow& then = report.rows[report.rows.size() - 1 - static_cast<std::size_t>(window)];
  const double denom = std::abs(now.cost_total);
  const double change = std::abs(now.cost_total - then.cost_total);
  const bool cost_ok = denom > 0.0 ? change <= tol * denom : change <= tol;
  return cost_ok && now.rel_change < tol;
}

std::vector<double> slice_masses(const StaggeredField& u, const GridSpec& g) {
  const std::size_t slices = g.Q + 1;
  std::vector<double> out(slices, 0.0);
  for (std::size_t c = 0; c < g.M * g.N; ++c) {
    for (std::size_t k = 0; k < slices; ++k) out[k] += u.rho[c * slices + k];
  }
  for (double& m : out) m *= g.cell_area();
  return out;
}

StaggeredField initial_iterate(const Problem& p, const PoissonWorkspace& w) {
  const GridSpec& g = p.grid;
  StaggeredField u = StaggeredField::zeros(g);
  for (std::size_t i = 0; i < g.M; ++i) {
    for (std::size_t j = 0; j < g.N; ++j) {
      for (std::size_t k = 0; k <= g.Q; ++k) {
        const double t = static_cast<double>(k) * g.dt;
        u.rho(i, j, k) = (1.0 - t) * p.mu(i, j) + t * p.nu(i, j);
      }
    }
  }
  return project_constraints(u, p.boundary, w, g);
}

namespace {

struct DualOut {
  CenteredField s;  // new dual iterate
  CenteredField P;  // prox_{J/tau}(v / tau), the primal point behind s
};

// s+ = prox_{tau J*}(s + tau I(xbar)) through the Moreau identity.
DualOut dual_step(const CenteredField& s, const StaggeredField& xbar, double tau,
                  const MetricField& metric, ProxParams prox, const GridSpec& g) {
  DualOut out;
  CenteredField v = s;
  axpy(tau, interpolate(xbar, g), v);
  CenteredField scaled = v;
  scale(1.0 / tau, scaled);
  prox.tau = 1.0 / tau;
  out.P = prox_J(scaled, metric, prox);
  axpy(-tau, out.P, v);
  out.s = std::move(v);
  return out;
}

// proj_C(x - step I*(s) - step r - step grad), r acting on rho only
StaggeredField primal_step(const StaggeredField& x, const CenteredField& s, double step,
                           const StaggeredField* grad, const Problem& p,
                           const PoissonWorkspace& w, const Array3* r = nullptr) {
  StaggeredField y = x;
  axpy(-step, interpolate_adjoint(s, p.grid), y);
  if (grad) axpy(-step, *grad, y);
  if (r) {
    for (std::size_t i = 0; i < y.rho.size(); ++i) y.rho[i] -= step * (*r)[i];
  }
  return project_constraints(y, p.boundary, w, p.grid);
}

void extrapolate_array(const Array3& xp, const Array3& x, double theta, Array3& out) {
  const std::size_t n = xp.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) out[i] = xp[i] + theta * (xp[i] - x[i]);
}

// xp + theta (xp - x)
StaggeredField extrapolate(const StaggeredField& xp, const StaggeredField& x, double theta) {
  StaggeredField out = xp;
  extrapolate_array(xp.m, x.m, theta, out.m);
  extrapolate_array(xp.n, x.n, theta, out.n);
  extrapolate_array(xp.rho, x.rho, theta, out.rho);
  return out;
}

double rel_change(const StaggeredField& xp, const StaggeredField& x) {
  StaggeredField d = xp;
  axpy(-1.0, x, d);
  const double nx = norm(xp);
  return nx > 0.0 ? norm(d) / nx : norm(d);
}

// grad h = (alpha2 / cell volume) grad H on the rho component.
struct HEval {
  StaggeredField grad;
  double value = 0.0;
};

HEval eval_grad_h(const Problem& p, const StaggeredField& x, const SinkhornParams& sp,
                  SinkhornCache& cache) {
  HGrad hg = grad_H(x.rho, p.coupling, p.secondary_cost, sp, p.grid, &cache);
  HEval out;
  out.value = hg.value;
  out.grad = StaggeredField::zeros(p.grid);
  const double w = p.spec.alpha.secondary / p.grid.cell_volume();
  for (std::size_t i = 0; i < hg.grad.size(); ++i) out.grad.rho[i] = w * hg.grad[i];
  return out;
}

void check_finite(const ReportRow& r) {
  if (!std::isfinite(r.cost_total) || !std::isfinite(r.rel_change) ||
      !std::isfinite(r.div_residual_max)) {
    throw NumericalError("non-finite iterate at iteration " + std::to_string(r.iter));
  }
}

// Keeps the dense per-iteration trace for the stopping rule and the sparse
// logged rows for the report.
class Recorder {
 public:
  Recorder(const SolverConfig& cfg, ConvergenceReport& report) : cfg_(cfg), report_(report) {}

  bool push(const ReportRow& row) {
    check_finite(row);
    trace_.rows.push_back(row);
    const bool stop = stopping_check(trace_, cfg_.window, cfg_.stop_tol);
    if (stop || row.iter % std::max(1, cfg_.log_every) == 0 || row.iter == 1 ||
        row.iter == cfg_.max_iters) {
      report_.rows.push_back(row);
    }
    return stop;
  }
  bool last_logged(int iter) const {
    return !report_.rows.empty() && report_.rows.back().iter == iter;
  }

 private:
  const SolverConfig& cfg_;
  ConvergenceReport& report_;
  ConvergenceReport trace_;
};

void validate_config(const SolverConfig& cfg) {
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(cfg.stop_tol > 0.0)) throw ConfigError("stop_tol must be positive");
  if (cfg.window < 1) throw ConfigError("stopping window must be >= 1");
  if (cfg.tau < 0.0 || cfg.sigma < 0.0) throw ConfigError("step sizes must be positive");
  if (!(cfg.theta > 0.5) && cfg.algorithm == Algorithm::chambolle_pock) {
    throw ConfigError("theta must exceed 1/2");
  }
}

}  // namespace

SolveResult solve_monge(const Problem& p, const SolverConfig& cfg) {
  validate_config(cfg);
  const GridSpec& g = p.grid;
  const PoissonWorkspace w(g);
  SolveResult res;
  ConvergenceReport& rep = res.report;
  rep.norm_estimate = estimate_operator_norm(g, cfg.norm_iters, cfg.seed);
  StepSizes st = auto_step_sizes(g, Algorithm::chambolle_pock, rep.norm_estimate, 0.0);
  if (cfg.tau > 0.0) st.tau = cfg.tau;
  if (cfg.sigma > 0.0) st.sigma = cfg.sigma;
  rep.tau = st.tau;
  rep.sigma = st.sigma;

  StaggeredField x = initial_iterate(p, w);
  StaggeredField xbar = x;
  CenteredField s = CenteredField::zeros(g);
  Recorder rec(cfg, rep);
  rep.status = RunStatus::max_iters;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    DualOut d = dual_step(s, xbar, st.tau, p.metric, cfg.prox, g);
    s = std::move(d.s);
    StaggeredField xp = primal_step(x, s, st.sigma, nullptr, p, w);
    xbar = extrapolate(xp, x, cfg.theta);

    ReportRow row;
    row.iter = it;
    const KineticCost kc = kinetic_cost(d.P, p.metric, g);
    row.cost_total = kc.total;
    row.cost_primary = kc.energy_primary;
    row.cost_secondary = kc.energy_secondary;
    row.div_residual_max = max_abs(divergence(xp, g));
    row.rel_change = rel_change(xp, x);
    x = std::move(xp);
    if (cfg.on_iterate) cfg.on_iterate(it, x);
    rep.iterations = it;
    if (rec.push(row)) {
      rep.status = RunStatus::converged;
      break;
    }
  }
  res.u = std::move(x);
  return res;
}

double estimate_beta_inv(const Problem& p, const StaggeredField& u, const PoissonWorkspace& w,
                         const SinkhornParams& sp, std::uint64_t seed, int probes) {
  if (!(p.spec.alpha.secondary > 0.0)) return 0.0;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  SinkhornCache cache;
  const HEval base = eval_grad_h(p, u, sp, cache);
  const double amp = 1e-2 * max_abs(u.rho);
  double best = 0.0;
  for (int probe = 0; probe < probes; ++probe) {
    StaggeredField v = u;
    for (double& x : v.rho.values()) x += amp * normal(rng);
    v = project_constraints(v, p.boundary, w, p.grid);
    SinkhornCache local = cache;
    const HEval other = eval_grad_h(p, v, sp, local);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.rho.size(); ++i) {
      const double dg = other.grad.rho[i] - base.grad.rho[i];
      const double dr = v.rho[i] - u.rho[i];
      num += dg * dg;
      den += dr * dr;
    }
    if (den > 0.0) best = std::max(best, std::sqrt(num / den));
  }
  return best;
}

SolveResult solve_three_term(const Problem& p, const SolverConfig& cfg) {
  validate_config(cfg);
  if (p.spec.form != Form::kantorovich) {
    throw ConfigError("three-term solvers need a Kantorovich-form problem");
  }
  if (cfg.algorithm == Algorithm::chambolle_pock) {
    throw ConfigError("solve_three_term called with chambolle_pock");
  }
  const GridSpec& g = p.grid;
  const PoissonWorkspace w(g);
  SolveResult res;
  ConvergenceReport& rep = res.report;
  rep.norm_estimate = estimate_operator_norm(g, cfg.norm_iters, cfg.seed);

  StaggeredField x = initial_iterate(p, w);
  const bool smooth = p.spec.alpha.secondary > 0.0;
  SinkhornCache cache;
  // The probe sees the smooth initial iterate; the local constant grows about
  // 2.5x as the slices concentrate, hence the margin.
  rep.beta_inv = cfg.beta_inv > 0.0 ? cfg.beta_inv
                                    : 2.0 * estimate_beta_inv(p, x, w, cfg.sinkhorn, cfg.seed);
  // H lives on rho >= 0. That constraint is a second dual block with operator
  // the rho selection (norm 1), so the stacked operator has norm^2 |I|^2 + 1.
  const double stacked = smooth ? std::sqrt(rep.norm_estimate * rep.norm_estimate + 1.0)
                                : rep.norm_estimate;
  StepSizes st = auto_step_sizes(g, cfg.algorithm, stacked, rep.beta_inv);
  if (cfg.tau > 0.0) st.tau = cfg.tau;
  if (cfg.sigma > 0.0) st.sigma = cfg.sigma;
  rep.tau = st.tau;
  rep.sigma = st.sigma;
  const double delta = st.tau, gamma = st.sigma;
  const double alpha2 = p.spec.alpha.secondary;

  HEval hx;
  if (smooth) hx = eval_grad_h(p, x, cfg.sinkhorn, cache);
  StaggeredField xbar = x;
  CenteredField s = CenteredField::zeros(g);
  Array3 r(g.M, g.N, g.Q + 1);  // dual of rho >= 0, stays <= 0
  const Array3* rp = smooth ? &r : nullptr;
  Recorder rec(cfg, rep);
  rep.status = RunStatus::max_iters;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    DualOut d = dual_step(s, xbar, delta, p.metric, cfg.prox, g);
    s = std::move(d.s);
    if (smooth) {
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::min(r[i] + delta * xbar.rho[i], 0.0);
    }
    StaggeredField xp = primal_step(x, s, gamma, smooth ? &hx.grad : nullptr, p, w, rp);
    HEval hxp;
    if (smooth) hxp = eval_grad_h(p, xp, cfg.sinkhorn, cache);

    switch (cfg.algorithm) {
      case Algorithm::condat_vu:
        xbar = extrapolate(xp, x, 1.0);
        break;
      case Algorithm::yan:
        xbar = extrapolate(xp, x, 1.0);
        if (smooth) {
          axpy(gamma, hx.grad, xbar);
          axpy(-gamma, hxp.grad, xbar);
        }
        break;
      case Algorithm::pdfp:
        xbar = primal_step(xp, s, gamma, smooth ? &hxp.grad : nullptr, p, w, rp);
        break;
      case Algorithm::chambolle_pock:
        break;
    }

    ReportRow row;
    row.iter = it;
    const KineticCost kc = kinetic_cost(d.P, p.metric, g);
    row.div_residual_max = max_abs(divergence(xp, g));
    row.rel_change = rel_change(xp, x);
    row.cost_primary = kc.energy_primary;
    double h = smooth ? hxp.value : 0.0;
    row.cost_total = kc.total + alpha2 * h;
    x = std::move(xp);
    if (smooth) hx = std::move(hxp);
    if (cfg.on_iterate) cfg.on_iterate(it, x);
    rep.iterations = it;
    const bool stop = rec.push(row);
    if (stop) rep.status = RunStatus::converged;
    // Without the smooth term H is only evaluated for logged rows.
    if (rec.last_logged(it)) {
      if (!smooth) h = eval_H(x.rho, p.coupling, p.secondary_cost, cfg.sinkhorn, g, &cache);
      rep.rows.back().cost_secondary = h;
      rep.rows.back().h_value = h;
    }
    if (stop) break;
  }
  res.u = std::move(x);
  return res;
}

SolveResult solve(const Problem& p, const SolverConfig& cfg) {
  if (cfg.algorithm == Algorithm::chambolle_pock) {
    if (p.spec.form == Form::kantorovich) {
      throw ConfigError("Kantorovich-form problems need condat_vu, pdfp or yan");
    }
    return solve_monge(p, cfg);
  }
  return solve_three_term(p, cfg);
}

}  // namespace syncot
