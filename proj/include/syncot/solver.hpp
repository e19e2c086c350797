#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "syncot/discrete_ot.hpp"
#include "syncot/grid.hpp"
#include "syncot/problems.hpp"
#include "syncot/proxops.hpp"

namespace syncot {

enum class Algorithm { chambolle_pock, condat_vu, pdfp, yan };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct SolverConfig {
  Algorithm algorithm = Algorithm::chambolle_pock;
  double tau = 0.0;    // dual step (delta for three-term); 0 selects auto
  double sigma = 0.0;  // primal step (gamma for three-term); 0 selects auto
  double theta = 1.0;
  int max_iters = 20000;
  double stop_tol = 1e-6;
  int window = 50;
  int log_every = 10;
  double beta_inv = 0.0;  // Lipschitz constant of grad h; 0 estimates it
  std::uint64_t seed = 0;
  int norm_iters = 200;
  ProxParams prox;  // tau is overwritten by the solver
  SinkhornParams sinkhorn;

  // Called with every primal iterate after the projection step.
  std::function<void(int, const StaggeredField&)> on_iterate;
};

struct ReportRow {
  int iter = 0;
  double cost_total = 0.0;
  double cost_primary = 0.0;    // unweighted kinetic energy in the primary space
  double cost_secondary = 0.0;  // unweighted secondary energy (Monge) or H (Kantorovich)
  std::optional<double> h_value;
  double div_residual_max = 0.0;
  double rel_change = 0.0;
};

enum class RunStatus { converged, max_iters, error };
const char* to_string(RunStatus s);

struct ConvergenceReport {
  std::vector<ReportRow> rows;
  RunStatus status = RunStatus::max_iters;
  int iterations = 0;
  double tau = 0.0;
  double sigma = 0.0;
  double norm_estimate = 0.0;
  double beta_inv = 0.0;
  std::string message;
};

struct SolveResult {
  StaggeredField u;
  ConvergenceReport report;
};

struct StepSizes {
  double tau = 0.0;    // dual step (delta)
  double sigma = 0.0;  // primal step (gamma)
};

// Two-term: tau = sigma = 0.99 / norm. Three-term: gamma starts at 1 and is
// halved until the Lipschitz condition holds with a 2% margin, then delta is
// chosen so the coupled condition holds with a 2% margin.
StepSizes auto_step_sizes(const GridSpec& g, Algorithm alg, double norm_est, double beta_inv);

// True when the cost_total changed by less than tol (relative) across the
// trailing window of rows and the last row's rel_change is below tol.
bool stopping_check(const ConvergenceReport& report, int window, double tol);

// rho linear in t between the marginals, zero momenta, projected once.
StaggeredField initial_iterate(const Problem& p, const PoissonWorkspace& w);

SolveResult solve_monge(const Problem& p, const SolverConfig& cfg);
SolveResult solve_three_term(const Problem& p, const SolverConfig& cfg);
// Dispatches on cfg.algorithm.
SolveResult solve(const Problem& p, const SolverConfig& cfg);

// Largest ratio |grad h(u1) - grad h(u2)| / |u1 - u2| over random feasible
// perturbations of u.
double estimate_beta_inv(const Problem& p, const StaggeredField& u, const PoissonWorkspace& w,
                         const SinkhornParams& sp, std::uint64_t seed, int probes = 8);

// Per-slice total mass (sum over space of rho times the cell area).
std::vector<double> slice_masses(const StaggeredField& u, const GridSpec& g);

}  // namespace syncot
