#pragma once

#include <array>
#include <memory>

#include "syncot/grid.hpp"
#include "syncot/metric.hpp"

namespace syncot {

struct ProxParams {
  double tau = 1.0;
  double fp_tol = 1e-11;   // absolute tolerance on psi(rho) = rho - phi(rho)
  int fp_max_iters = 200;
};

void validate(const ProxParams& p);

struct ProxCell {
  std::array<double, 2> m{0.0, 0.0};
  double rho = 0.0;
};

// Minimizer of J(m', rho'; A) + |(m, rho) - (m', rho')|^2 / (2 tau) for one
// cell. In 1D pass m[1] = 0 and A = diag(a11, 1).
ProxCell prox_J_cell(std::array<double, 2> m, double rho, const Sym2& a, const ProxParams& p);

// The plain fixed-point iteration rho <- phi(rho), kept to compare against the
// safeguarded root finder. Converges only for large enough tau.
struct FixedPointTrace {
  double rho = 0.0;
  int iters = 0;
  bool converged = false;
};
FixedPointTrace prox_fixed_point(std::array<double, 2> m, double rho, const Sym2& a,
                                 const ProxParams& p, double rho_start);

CenteredField prox_J(const CenteredField& v, const MetricField& a, const ProxParams& p);
// Moreau identity: prox_{tau J*}(v) = v - tau prox_{J/tau}(v / tau).
CenteredField prox_J_conj(const CenteredField& v, const MetricField& a, double tau,
                          const ProxParams& inner = {});

// Neumann Laplacian diagonalized by the type-II cosine transform. Immutable
// after construction; safe to share between threads.
class PoissonWorkspace {
 public:
  explicit PoissonWorkspace(const GridSpec& g);
  ~PoissonWorkspace();
  PoissonWorkspace(const PoissonWorkspace&) = delete;
  PoissonWorkspace& operator=(const PoissonWorkspace&) = delete;

  const GridSpec& grid() const { return g_; }
  const Array3& eigenvalues() const { return lambda_; }

  // Applies the forward transform, scales each coefficient, inverts.
  Array3 solve(const Array3& rhs) const;

 private:
  struct Plans;
  GridSpec g_;
  Array3 lambda_;
  std::unique_ptr<Plans> plans_;
};

// Mean-zero s with -Laplace(s) = rhs - mean(rhs), homogeneous Neumann.
Array3 neumann_poisson_solve(const Array3& rhs, const PoissonWorkspace& w);

// Orthogonal projection onto {div u = 0, boundary(u) = b0}.
StaggeredField project_constraints(const StaggeredField& u, const BoundaryData& b0,
                                   const PoissonWorkspace& w, const GridSpec& g);

namespace serial {
CenteredField prox_J(const CenteredField& v, const MetricField& a, const ProxParams& p);
}  // namespace serial

}  // namespace syncot
