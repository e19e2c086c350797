// Neumann Poisson solve by cosine transforms and the projection onto the
// continuity-equation constraint set.
#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include "syncot/error.hpp"
#include "syncot/proxops.hpp"

namespace syncot {

namespace {
// FFTW's planner is not thread safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PoissonWorkspace::Plans {
  fftw_plan forward = nullptr;   // REDFT10 on every axis (DCT-II)
  fftw_plan backward = nullptr;  // REDFT01 on every axis (DCT-III)
  double norm = 1.0;
};

PoissonWorkspace::PoissonWorkspace(const GridSpec& g)
    : g_(g), lambda_(g.M, g.N, g.Q), plans_(std::make_unique<Plans>()) {
  const double pi = std::numbers::pi;
  auto eig = [pi](std::size_t i, std::size_t n, double h) {
    return (2.0 - 2.0 * std::cos(pi * static_cast<double>(i) / static_cast<double>(n))) / (h * h);
  };
  for (std::size_t i = 0; i < g.M; ++i) {
    const double lx = eig(i, g.M, g.dx);
    for (std::size_t j = 0; j < g.N; ++j) {
      const double ly = eig(j, g.N, g.dy);
      for (std::size_t k = 0; k < g.Q; ++k) lambda_(i, j, k) = lx + ly + eig(k, g.Q, g.dt);
    }
  }
  std::vector<double> a(g.cells()), b(g.cells());
  const int n0 = static_cast<int>(g.M), n1 = static_cast<int>(g.N), n2 = static_cast<int>(g.Q);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->forward = fftw_plan_r2r_3d(n0, n1, n2, a.data(), b.data(), FFTW_REDFT10,
                                       FFTW_REDFT10, FFTW_REDFT10, flags);
    plans_->backward = fftw_plan_r2r_3d(n0, n1, n2, a.data(), b.data(), FFTW_REDFT01,
                                        FFTW_REDFT01, FFTW_REDFT01, flags);
  }
  if (!plans_->forward || !plans_->backward) throw NumericalError("FFTW planning failed");
  // Unnormalized REDFT01(REDFT10(x)) = 2n x along each axis.
  plans_->norm = 1.0 / (8.0 * static_cast<double>(g.cells()));
}

PoissonWorkspace::~PoissonWorkspace() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

Array3 PoissonWorkspace::solve(const Array3& rhs) const {
  if (rhs.nx() != g_.M || rhs.ny() != g_.N || rhs.nz() != g_.Q) {
    throw ConfigError("Poisson right-hand side does not match the workspace grid");
  }
  Array3 in = rhs;
  Array3 coef(g_.M, g_.N, g_.Q);
  fftw_execute_r2r(plans_->forward, in.data(), coef.data());
  coef[0] = 0.0;
  const double nrm = plans_->norm;
  for (std::size_t idx = 1; idx < coef.size(); ++idx) coef[idx] *= nrm / lambda_[idx];
  Array3 s(g_.M, g_.N, g_.Q);
  fftw_execute_r2r(plans_->backward, coef.data(), s.data());
  return s;
}

Array3 neumann_poisson_solve(const Array3& rhs, const PoissonWorkspace& w) {
  return w.solve(rhs);
}

namespace {

// Net outward boundary flux of b0 integrated over the space-time boundary;
// zero is the solvability condition of the Neumann problem.
void check_compatible(const BoundaryData& b0, const GridSpec& g) {
  double net = 0.0, scale = 0.0;
  auto add = [&](const Array2& a, double sign, double w) {
    for (double v : a.values()) {
      net += sign * w * v;
      scale += w * std::abs(v);
    }
  };
  add(b0.flux_x1, 1.0, g.dy * g.dt);
  add(b0.flux_x0, -1.0, g.dy * g.dt);
  if (g.has_y()) {
    add(b0.flux_y1, 1.0, g.dx * g.dt);
    add(b0.flux_y0, -1.0, g.dx * g.dt);
  }
  add(b0.rho_terminal, 1.0, g.dx * g.dy);
  add(b0.rho_initial, -1.0, g.dx * g.dy);
  if (std::abs(net) > 1e-10 * std::max(scale, 1e-300)) {
    throw ConfigError("boundary data violates mass compatibility (net flux " +
                      std::to_string(net) + ")");
  }
}

}  // namespace

StaggeredField project_constraints(const StaggeredField& u, const BoundaryData& b0,
                                   const PoissonWorkspace& w, const GridSpec& g) {
  check_shape(u, g);
  check_shape(b0, g);
  if (!(w.grid() == g)) throw ConfigError("Poisson workspace built for a different grid");
  check_compatible(b0, g);
  StaggeredField out = impose_boundary(u, b0);
  const Array3 s = w.solve(divergence(out, g));
  const std::size_t M = g.M, N = g.N, Q = g.Q;
  const double inv_dx = 1.0 / g.dx, inv_dy = 1.0 / g.dy, inv_dt = 1.0 / g.dt;
  // Interior faces only; the boundary slabs keep b0.
#pragma omp parallel for schedule(static)
  for (std::size_t i = 1; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < Q; ++k) {
        out.m(i, j, k) += (s(i, j, k) - s(i - 1, j, k)) * inv_dx;
      }
    }
  }
  if (g.has_y()) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 1; j < N; ++j) {
        for (std::size_t k = 0; k < Q; ++k) {
          out.n(i, j, k) += (s(i, j, k) - s(i, j - 1, k)) * inv_dy;
        }
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 1; k < Q; ++k) {
        out.rho(i, j, k) += (s(i, j, k) - s(i, j, k - 1)) * inv_dt;
      }
    }
  }
  return out;
}

}  // namespace syncot
