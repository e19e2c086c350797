// Acceptance suite A1-A12. One PASS/FAIL line per criterion; exit status 1
// when any criterion fails. Pass criterion ids (e.g. "A4 A8") to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "syncot/cli.hpp"
#include "syncot/config.hpp"
#include "syncot/discrete_ot.hpp"
#include "syncot/field_io.hpp"
#include "syncot/proxops.hpp"
#include "syncot/solver.hpp"

using namespace syncot;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_diff(const oracle::Vec& a, const oracle::Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

BoundaryData random_boundary(const GridSpec& g, oracle::Rng& r) {
  BoundaryData b = BoundaryData::zero_flux(g, oracle::random_density(g, r),
                                           oracle::random_density(g, r));
  for (std::size_t j = 0; j < g.N; ++j) {
    for (std::size_t k = 0; k < g.Q; ++k) b.flux_x0(j, k) = b.flux_x1(j, k) = r.normal();
  }
  return b;
}

Outcome a1() {
  oracle::Rng r(101);
  const GridSpec g = GridSpec::make_2d(4, 4, 3);
  const PoissonWorkspace w(g);
  double err = 0.0, idem = 0.0, div = 0.0;
  for (int t = 0; t < 10; ++t) {
    const BoundaryData b = random_boundary(g, r);
    const StaggeredField u = oracle::random_staggered(g, r);
    const StaggeredField p = project_constraints(u, b, w, g);
    err = std::max(err, max_diff(oracle::flatten(p), oracle::flatten(oracle::dense_projection(u, b, g))));
    idem = std::max(idem, max_diff(oracle::flatten(project_constraints(p, b, w, g)), oracle::flatten(p)));
    div = std::max(div, max_abs(divergence(p, g)) / std::max(1.0, max_abs(divergence(u, g))));
  }
  return {err <= 1e-9 && idem <= 1e-10 && div <= 1e-8,
          "dense " + fmt("%.1e", err) + ", idempotence " + fmt("%.1e", idem) + ", |div| " +
              fmt("%.1e", div)};
}

Outcome a2() {
  oracle::Rng r(102);
  double err = 0.0;
  for (const GridSpec& g : {GridSpec::make_2d(6, 6, 4), GridSpec::make_2d(8, 8, 8)}) {
    const PoissonWorkspace w(g);
    for (int t = 0; t < 3; ++t) {
      Array3 rhs(g.M, g.N, g.Q);
      oracle::fill_normal(rhs, r);
      const Array3 s = neumann_poisson_solve(rhs, w), d = oracle::dense_poisson(rhs, g);
      for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s[i] - d[i]));
    }
  }
  return {err <= 1e-10, "max error " + fmt("%.1e", err)};
}

Outcome a3() {
  oracle::Rng r(103);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::array<double, 2> m{r.normal(), r.normal()};
    const double rho = r.uniform(-1.0, 2.0);
    const Sym2 a = oracle::random_spd(r, 100.0);
    ProxParams p;
    p.tau = std::pow(10.0, r.uniform(-2.0, 1.0));
    const ProxCell c = prox_J_cell(m, rho, a, p);
    const double got = oracle::prox_objective(c.m, c.rho, m, rho, a, p.tau);
    const oracle::ProxOracle o = oracle::prox_brute(m, rho, a, p.tau);
    worst = std::max(worst, got - o.value);
  }
  return {worst <= 1e-6, "worst objective gap " + fmt("%.1e", worst)};
}

Outcome a4() {
  // Truncation: W2^2 of the truncated normals against the untruncated 0.32.
  const double mc = oracle::mc_w2sq_truncated(0.3, 0.3, 0.7, 0.7, 0.1, 400000, 7);
  const double trunc = std::abs(mc - 0.32) / 0.32;
  RunConfig cfg = load_preset("fig3a_bump");
  cfg.problem.alpha = {1.0, 0.0};
  const SolveResult r = solve(build_problem(cfg), cfg.solver);
  const double cost = r.report.rows.back().cost_total;
  const double rel = std::abs(cost - 0.32) / 0.32;
  return {trunc <= 0.005 && rel <= 0.05 && r.report.status == RunStatus::converged,
          "cost_total " + fmt("%.6f", cost) + " (" + fmt("%.2f", 100.0 * rel) +
              "% off), Monte-Carlo truncation effect " + fmt("%.3f", 100.0 * trunc) + "%, " +
              std::to_string(r.report.iterations) + " iterations"};
}

Outcome a5() {
  RunConfig cfg = load_preset("fig4a_bump_kantorovich");
  cfg.problem.M = cfg.problem.N = 16;
  cfg.problem.Q = 8;
  cfg.problem.alpha = {1.0, 0.0};
  const Problem p = build_problem(cfg.problem);
  SolverConfig sc = cfg.solver;
  sc.max_iters = 100;
  sc.stop_tol = 1e-300;
  sc.tau = 0.6;
  sc.sigma = 0.4;
  std::vector<oracle::Vec> ref;
  sc.on_iterate = [&](int, const StaggeredField& u) { ref.push_back(oracle::flatten(u)); };
  solve_monge(p, sc);
  double worst = 0.0;
  for (Algorithm a : {Algorithm::yan, Algorithm::condat_vu}) {
    std::size_t k = 0;
    sc.algorithm = a;
    sc.on_iterate = [&](int, const StaggeredField& u) {
      worst = std::max(worst, max_diff(oracle::flatten(u), ref.at(k++)));
    };
    solve_three_term(p, sc);
    if (k != 100) return {false, "iteration count mismatch"};
  }
  return {ref.size() == 100 && worst <= 1e-12,
          "max iterate deviation over 100 iterations " + fmt("%.1e", worst)};
}

Outcome a6() {
  oracle::Rng r(106);
  const GridSpec g = GridSpec::make_2d(8, 8, 3);
  Eigen::MatrixXd pts(64, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) pts.row(static_cast<Eigen::Index>(i * 8 + j)) << g.x_center(i), g.y_center(j);
  }
  const CouplingOperator pi = CouplingOperator::identity(pts);
  const GroundCost c = GroundCost::squared_euclidean(pts);
  SinkhornParams sp;
  sp.epsilon_rel = 1e-4;
  sp.tol = 1e-11;
  sp.max_iters = 2000000;
  Array3 rho(8, 8, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    // Gaussian bumps drifting across the square plus a floor.
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double x = g.x_center(i) - 0.3 - 0.12 * static_cast<double>(k);
        const double y = g.y_center(j) - 0.4;
        s += (rho(i, j, k) = 0.2 + std::exp(-(x * x + y * y) / 0.05) + 0.1 * r.uniform());
      }
    }
    for (std::size_t i = 0; i < 64; ++i) rho[i * 4 + k] /= s * g.cell_area();
  }
  SinkhornCache cache;
  const HGrad h = grad_H(rho, pi, c, sp, g, &cache);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    Array3 d(8, 8, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < 64; ++i) mean += (d[i * 4 + k] = r.normal());
      for (std::size_t i = 0; i < 64; ++i) d[i * 4 + k] -= mean / 64.0;
    }
    const double step = 1e-4;
    auto shifted = [&](double s) {
      Array3 x = rho;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * d[i];
      SinkhornCache warm = cache;
      return eval_H(x, pi, c, sp, g, &warm);
    };
    const double fd = (shifted(step) - shifted(-step)) / (2.0 * step);
    double an = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) an += h.grad[i] * d[i];
    worst = std::max(worst, std::abs(an - fd) / std::abs(fd));
  }
  return {worst <= 1e-3, "worst relative error " + fmt("%.1e", worst) + " over 5 directions"};
}

// Per-slice L1 distance between two t-face densities.
double worst_slice_l1(const Array3& a, const Array3& b, const GridSpec& g) {
  double worst = 0.0;
  for (std::size_t k = 0; k <= g.Q; ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < g.M * g.N; ++c) s += std::abs(a[c * (g.Q + 1) + k] - b[c * (g.Q + 1) + k]);
    worst = std::max(worst, s * g.cell_area());
  }
  return worst;
}

Outcome a7() {
  RunConfig m = load_preset("fig3a_bump");
  RunConfig k = load_preset("fig4a_bump_kantorovich");
  for (RunConfig* c : {&m, &k}) {
    c->problem.M = c->problem.N = 24;
    c->problem.Q = 12;
    c->problem.alpha = {0.05, 0.95};
  }
  const Problem pm = build_problem(m), pk = build_problem(k);
  const SolveResult rm = solve(pm, m.solver);
  const SolveResult rk = solve(pk, k.solver);
  const double l1 = worst_slice_l1(rm.u.rho, rk.u.rho, pm.grid);
  return {l1 <= 0.05, "worst per-slice L1 " + fmt("%.3f", l1) + " (Monge " +
                          std::to_string(rm.report.iterations) + " iterations, Kantorovich " +
                          std::to_string(rk.report.iterations) + " iterations, " +
                          to_string(rk.report.status) + ")"};
}

Outcome a8() {
  std::vector<double> prim, sec;
  std::string detail;
  bool converged = true;
  for (double a2 : {0.01, 0.02, 0.05}) {
    RunConfig cfg = load_preset("fig3a_bump");
    cfg.problem.alpha = {1.0 - a2, a2};
    const SolveResult r = solve(build_problem(cfg), cfg.solver);
    converged = converged && r.report.status == RunStatus::converged;
    prim.push_back(r.report.rows.back().cost_primary);
    sec.push_back(r.report.rows.back().cost_secondary);
    detail += fmt("a2=%.2f: ", a2) + fmt("primary %.5f ", prim.back()) + fmt("secondary %.5f; ", sec.back());
  }
  const bool ok = prim[0] < prim[1] && prim[1] < prim[2] && sec[0] > sec[1] && sec[1] > sec[2];
  return {ok && converged, detail + (converged ? "all converged" : "not all converged")};
}

double speed_cv(const Alpha& alpha) {
  RunConfig cfg = load_preset("fig2_1d_quadratic");
  cfg.problem.alpha = alpha;
  const Problem p = build_problem(cfg);
  const SolveResult r = solve(p, cfg.solver);
  const GridSpec& g = p.grid;
  std::vector<double> centre(g.Q + 1, 0.0);
  for (std::size_t k = 0; k <= g.Q; ++k) {
    for (std::size_t i = 0; i < g.M; ++i) {
      const double x = g.x_center(i);
      centre[k] += x * x * r.u.rho(i, 0, k) * g.dx;
    }
  }
  std::vector<double> speed;
  for (std::size_t k = 0; k < g.Q; ++k) speed.push_back(std::abs(centre[k + 1] - centre[k]) / g.dt);
  double mean = 0.0, var = 0.0;
  for (double s : speed) mean += s / static_cast<double>(speed.size());
  for (double s : speed) var += (s - mean) * (s - mean) / static_cast<double>(speed.size());
  return std::sqrt(var) / mean;
}

Outcome a9() {
  const double sync = speed_cv({0.1, 0.9}), plain = speed_cv({1.0, 0.0});
  return {sync <= 0.2 && plain >= 2.0 * sync,
          "CV " + fmt("%.4f", sync) + " for (0.1, 0.9), " + fmt("%.4f", plain) + " for (1, 0)"};
}

Outcome a10() {
  oracle::Rng r(110);
  double worst = -1e300;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + r.index(5);
    Eigen::MatrixXd pa(static_cast<Eigen::Index>(n), 2), pb(static_cast<Eigen::Index>(n), 2);
    std::vector<double> a(n), b(n);
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      pa.row(e) << r.uniform(), r.uniform();
      pb.row(e) << r.uniform(), r.uniform();
      sa += (a[i] = r.uniform(0.1, 1.0));
      sb += (b[i] = r.uniform(0.1, 1.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
      a[i] /= sa;
      b[i] /= sb;
    }
    const GroundCost c = GroundCost::squared_euclidean(pa, pb);
    SinkhornParams sp;
    sp.epsilon_rel = 1e-4;
    sp.tol = 1e-9;
    sp.max_iters = 5000000;
    const SinkhornResult s = sinkhorn_log(DiscreteMeasure(a), DiscreteMeasure(b), c, sp);
    const double exact = exact_ot_small(DiscreteMeasure(a), DiscreteMeasure(b), c).w2sq;
    const double bound = 5.0 * s.epsilon * std::log(static_cast<double>(n)) + 1e-9;
    worst = std::max(worst, std::abs(s.w2sq_reg - exact) / bound);
  }
  return {worst <= 1.0, "worst |gap| / bound " + fmt("%.3f", worst)};
}

Outcome a11() {
  oracle::Rng r(111);
  double worst = 1e300;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + r.index(7);
    Eigen::MatrixXd pa(static_cast<Eigen::Index>(n), 2), pb(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < pa.rows(); ++i) {
      pa.row(i) << r.uniform(), r.uniform();
      pb.row(i) << r.uniform(), r.uniform();
    }
    const GroundCost c = GroundCost::squared_euclidean(pa, pb);
    auto weights = [&] {
      std::vector<double> w(n);
      double s = 0.0;
      for (double& x : w) s += (x = r.uniform(0.0, 1.0));
      for (double& x : w) x /= s;
      return w;
    };
    const auto a0 = weights(), a1 = weights(), b0 = weights(), b1 = weights();
    const double s = r.uniform();
    std::vector<double> as(n), bs(n);
    for (std::size_t i = 0; i < n; ++i) {
      as[i] = (1.0 - s) * a0[i] + s * a1[i];
      bs[i] = (1.0 - s) * b0[i] + s * b1[i];
    }
    auto w2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
      return exact_ot_small(DiscreteMeasure(a), DiscreteMeasure(b), c).w2sq;
    };
    worst = std::min(worst, (1.0 - s) * w2(a0, b0) + s * w2(a1, b1) - w2(as, bs));
  }
  return {worst >= -1e-10, "smallest slack " + fmt("%.2e", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome a12() {
  const fs::path root = fs::temp_directory_path() / "syncot_acceptance_a12";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"monge", "preset = fig3a_bump\ngrid.M = 16\ngrid.N = 16\ngrid.Q = 8\n"
                "solver.max_iters = 400\noutput.snapshot_stride = 10\n"},
      {"kantorovich", "preset = fig4a_bump_kantorovich\ngrid.M = 10\ngrid.N = 10\ngrid.Q = 6\n"
                      "solver.max_iters = 60\noutput.snapshot_stride = 5\n"},
  };
  bool identical = true;
  double worst_mass = 0.0;
  std::size_t snapshots = 0;
  for (const auto& [name, text] : cases) {
    std::ofstream(root / (name + ".cfg")) << text;
    std::string logs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (name + std::to_string(run));
      std::ostringstream o, e;
      const int code = run_cli({"solve", "--config", (root / (name + ".cfg")).string(), "--out",
                                out.string()},
                               o, e);
      if (code != kExitOk && code != kExitMaxIters) return {false, name + " run failed: " + e.str()};
      logs[run] = slurp(out / "convergence.csv");
      identical = identical && slurp(out / "rho.sot1") == slurp(root / (name + "0") / "rho.sot1");
      for (const auto& entry : fs::directory_iterator(out / "snapshots")) {
        const FieldArray f = read_field(entry.path().string());
        const std::size_t M = f.dims[0], N = f.dims[1], T = f.dims[2];
        const double area = 1.0 / static_cast<double>(M * N);
        for (std::size_t k = 0; k < T; ++k) {
          double mass = 0.0;
          for (std::size_t c = 0; c < M * N; ++c) mass += f.data[c * T + k] * area;
          worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        }
        ++snapshots;
      }
    }
    identical = identical && !logs[0].empty() && logs[0] == logs[1];
  }
  fs::remove_all(root);
  return {identical && worst_mass <= 1e-8 && snapshots > 0,
          std::string(identical ? "byte-identical logs and fields" : "runs differ") + ", " +
              std::to_string(snapshots) + " snapshots, worst slice-mass error " +
              fmt("%.1e", worst_mass)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"A1", a1},  {"A2", a2}, {"A3", a3}, {"A4", a4},   {"A5", a5},   {"A6", a6},
      {"A7", a7},  {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-4s %s  [%.1f s] %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
