#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "syncot/error.hpp"
#include "syncot/solver.hpp"

using namespace syncot;

namespace {

ProblemSpec gaussians(std::size_t M, std::size_t Q, double x0, double x1, Form form = Form::monge) {
  ProblemSpec s;
  s.M = s.N = M;
  s.Q = Q;
  s.form = form;
  s.source.x0 = x0;
  s.source.y0 = 0.5;
  s.target.x0 = x1;
  s.target.y0 = 0.5;
  s.source.sigma = s.target.sigma = 0.12;
  return s;
}

ReportRow row(int it, double cost, double rel) {
  ReportRow r;
  r.iter = it;
  r.cost_total = cost;
  r.rel_change = rel;
  return r;
}

// W2^2 between two piecewise-constant densities on [0,1] through their
// quantile functions, integrated with a fine midpoint rule.
double w2sq_1d(const Array2& a, const Array2& b, const GridSpec& g) {
  auto quantile = [&](const Array2& d, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.M; ++i) {
      const double m = d(i, 0) * g.dx;
      if (acc + m >= s || i + 1 == g.M) {
        return (static_cast<double>(i) + (m > 0.0 ? (s - acc) / m : 0.0)) * g.dx;
      }
      acc += m;
    }
    return 1.0;
  };
  const int n = 200000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = (k + 0.5) / n;
    const double d = quantile(a, s) - quantile(b, s);
    sum += d * d;
  }
  return sum / n;
}

void check_feasible(const StaggeredField& u, const Problem& p) {
  CHECK(max_abs(divergence(u, p.grid)) < 1e-9);
  CHECK(extract_boundary(u) == p.boundary);
  for (double m : slice_masses(u, p.grid)) CHECK(m == doctest::Approx(1.0).epsilon(1e-10));
}

}  // namespace

TEST_CASE("auto step sizes satisfy the convergence conditions") {
  const GridSpec g = GridSpec::make_2d(8, 8, 4);
  const StepSizes cp = auto_step_sizes(g, Algorithm::chambolle_pock, 1.3, 0.0);
  CHECK(cp.tau == doctest::Approx(0.99 / 1.3));
  CHECK(cp.sigma == cp.tau);
  CHECK(cp.tau * cp.sigma * 1.3 * 1.3 < 1.0);
  for (double beta_inv : {0.0, 0.5, 3.0, 40.0}) {
    const StepSizes cv = auto_step_sizes(g, Algorithm::condat_vu, 1.4, beta_inv);
    CHECK(cv.sigma * cv.tau * 1.4 * 1.4 + 0.5 * cv.sigma * beta_inv <= 0.98 + 1e-12);
    CHECK(cv.tau > 0.0);
    for (Algorithm a : {Algorithm::pdfp, Algorithm::yan}) {
      const StepSizes s = auto_step_sizes(g, a, 1.4, beta_inv);
      CHECK(s.sigma * beta_inv < 2.0);
      CHECK(s.sigma * s.tau * 1.4 * 1.4 <= 0.98 + 1e-12);
    }
  }
  CHECK_THROWS_AS(auto_step_sizes(g, Algorithm::yan, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(auto_step_sizes(g, Algorithm::yan, 1.0, -1.0), ConfigError);
}

TEST_CASE("stopping rule") {
  ConvergenceReport rep;
  CHECK_FALSE(stopping_check(rep, 5, 1e-6));
  for (int i = 0; i < 5; ++i) rep.rows.push_back(row(i, 2.0, 0.0));
  CHECK_FALSE(stopping_check(rep, 5, 1e-6));  // window not yet filled
  rep.rows.push_back(row(5, 2.0, 0.0));
  CHECK(stopping_check(rep, 5, 1e-6));
  rep.rows.back().rel_change = 1e-3;
  CHECK_FALSE(stopping_check(rep, 5, 1e-6));
  rep.rows.back() = row(5, 2.1, 0.0);
  CHECK_FALSE(stopping_check(rep, 5, 1e-6));
}

TEST_CASE("property: stopping on a geometric decay fires where predicted") {
  oracle::Rng r(61);
  for (int t = 0; t < 20; ++t) {
    const double limit = r.uniform(0.5, 2.0), ratio = r.uniform(0.8, 0.98), tol = 1e-6;
    const int window = 1 + static_cast<int>(r.index(20));
    ConvergenceReport rep;
    int fired = -1;
    for (int k = 0; k < 5000 && fired < 0; ++k) {
      rep.rows.push_back(row(k, limit + std::pow(ratio, k), 0.0));
      if (stopping_check(rep, window, tol)) fired = k;
    }
    // r^(k-w) (1 - r^w) <= tol (limit + r^k), solved for the first k.
    int want = -1;
    for (int k = window; k < 5000; ++k) {
      const double lhs = std::pow(ratio, k - window) * (1.0 - std::pow(ratio, window));
      if (lhs <= tol * (limit + std::pow(ratio, k))) {
        want = k;
        break;
      }
    }
    CHECK(fired == want);
  }
}

TEST_CASE("equal marginals: the static solution") {
  const Problem p = build_problem(gaussians(8, 4, 0.5, 0.5));
  SolverConfig cfg;
  cfg.max_iters = 300;
  cfg.stop_tol = 1e-10;
  const SolveResult r = solve(p, cfg);
  check_feasible(r.u, p);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      for (std::size_t k = 0; k <= 4; ++k) {
        CHECK(r.u.rho(i, j, k) == doctest::Approx(p.mu(i, j)).epsilon(1e-8));
      }
    }
  }
  CHECK(r.report.rows.back().cost_total <= 1e-8);
}

TEST_CASE("property: every iterate is feasible and mass-preserving") {
  for (Form form : {Form::monge, Form::kantorovich}) {
    ProblemSpec s = gaussians(6, 4, 0.3, 0.7, form);
    if (form == Form::kantorovich) s.alpha = {0.9, 0.1};
    const Problem p = build_problem(s);
    SolverConfig cfg;
    cfg.algorithm = form == Form::monge ? Algorithm::chambolle_pock : Algorithm::pdfp;
    cfg.max_iters = 20;
    cfg.sinkhorn.epsilon_rel = 2e-2;
    int seen = 0;
    cfg.on_iterate = [&](int, const StaggeredField& u) {
      ++seen;
      CHECK(max_abs(divergence(u, p.grid)) < 1e-9);
      CHECK(extract_boundary(u) == p.boundary);
      for (double m : slice_masses(u, p.grid)) CHECK(m == doctest::Approx(1.0).epsilon(1e-10));
    };
    const SolveResult r = solve(p, cfg);
    CHECK(seen == 20);
    CHECK(r.report.iterations == 20);
    CHECK(r.report.status == RunStatus::max_iters);
  }
}

TEST_CASE("1D Monge cost approaches the exact quadratic Wasserstein distance") {
  ProblemSpec s;
  s.d_spatial = 1;
  s.M = 64;
  s.N = 1;
  s.Q = 32;
  s.source.x0 = 0.3;
  s.target.x0 = 0.65;
  s.source.sigma = 0.08;
  s.target.sigma = 0.12;
  const Problem p = build_problem(s);
  SolverConfig cfg;
  cfg.max_iters = 6000;
  cfg.stop_tol = 1e-7;
  const SolveResult r = solve(p, cfg);
  check_feasible(r.u, p);
  const double want = w2sq_1d(p.mu, p.nu, p.grid);
  CHECK(r.report.rows.back().cost_total == doctest::Approx(want).epsilon(0.03));
}

TEST_CASE("identity map: splitting alpha changes nothing") {
  ProblemSpec a = gaussians(8, 4, 0.3, 0.6);
  ProblemSpec b = a;
  b.alpha = {0.25, 0.75};
  SolverConfig cfg;
  cfg.max_iters = 200;
  const SolveResult ra = solve(build_problem(a), cfg);
  const SolveResult rb = solve(build_problem(b), cfg);
  CHECK((oracle::flatten(ra.u) - oracle::flatten(rb.u)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(ra.report.rows.back().cost_total ==
        doctest::Approx(rb.report.rows.back().cost_total).epsilon(1e-10));
}

TEST_CASE("runs are deterministic") {
  for (Form form : {Form::monge, Form::kantorovich}) {
    ProblemSpec s = gaussians(6, 4, 0.3, 0.7, form);
    if (form == Form::kantorovich) s.alpha = {0.9, 0.1};
    const Problem p = build_problem(s);
    SolverConfig cfg;
    cfg.algorithm = form == Form::monge ? Algorithm::chambolle_pock : Algorithm::yan;
    cfg.max_iters = 30;
    cfg.sinkhorn.epsilon_rel = 2e-2;
    const SolveResult r1 = solve(p, cfg), r2 = solve(p, cfg);
    CHECK(r1.u == r2.u);
    REQUIRE(r1.report.rows.size() == r2.report.rows.size());
    for (std::size_t i = 0; i < r1.report.rows.size(); ++i) {
      CHECK(r1.report.rows[i].cost_total == r2.report.rows[i].cost_total);
    }
  }
}

TEST_CASE("three-term solvers decrease the objective on a small Kantorovich problem") {
  ProblemSpec s = gaussians(8, 4, 0.3, 0.7, Form::kantorovich);
  s.alpha = {0.8, 0.2};
  const Problem p = build_problem(s);
  for (Algorithm a : {Algorithm::condat_vu, Algorithm::pdfp, Algorithm::yan}) {
    SolverConfig cfg;
    cfg.algorithm = a;
    cfg.max_iters = 200;
    cfg.log_every = 50;
    cfg.sinkhorn.epsilon_rel = 2e-2;
    const SolveResult r = solve(p, cfg);
    check_feasible(r.u, p);
    // Rows: 1, 50, 100, 150, 200. The first steps overshoot, so the trend is
    // read after the transient.
    REQUIRE(r.report.rows.size() == 5);
    CHECK(r.report.beta_inv > 0.0);
    CHECK(r.report.rows.back().h_value.has_value());
    for (std::size_t i = 2; i < 5; ++i) {
      CHECK(r.report.rows[i].cost_total < r.report.rows[i - 1].cost_total);
    }
  }
}

TEST_CASE("with alpha2 = 0 the three-term iterations reduce to Chambolle-Pock") {
  ProblemSpec s = gaussians(6, 4, 0.3, 0.7, Form::kantorovich);
  const Problem p = build_problem(s);
  SolverConfig cfg;
  cfg.max_iters = 40;
  cfg.sinkhorn.epsilon_rel = 2e-2;
  cfg.tau = 0.5;
  cfg.sigma = 0.5;
  const SolveResult ref = solve_monge(p, cfg);
  for (Algorithm a : {Algorithm::condat_vu, Algorithm::yan}) {
    cfg.algorithm = a;
    const SolveResult r = solve_three_term(p, cfg);
    CHECK((oracle::flatten(r.u) - oracle::flatten(ref.u)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("solver configuration errors") {
  const Problem p = build_problem(gaussians(4, 2, 0.3, 0.7));
  SolverConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(solve(p, cfg), ConfigError);
  cfg = SolverConfig{};
  cfg.theta = 0.3;
  CHECK_THROWS_AS(solve(p, cfg), ConfigError);
  CHECK(algorithm_from_string(to_string(Algorithm::pdfp)) == Algorithm::pdfp);
  CHECK_THROWS_AS(algorithm_from_string("admm"), ConfigError);
}
