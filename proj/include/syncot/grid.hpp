#pragma once

#include <cstddef>
#include <cstdint>

#include "syncot/array.hpp"

namespace syncot {

// Uniform space-time grid on [0,1]^d x [0,1]. For d_spatial == 1 the y
// direction collapses to a single cell (N == 1) and carries no flux.
struct GridSpec {
  int d_spatial = 2;
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t Q = 0;
  double dx = 0.0;
  double dy = 0.0;
  double dt = 0.0;

  static GridSpec make(int d_spatial, std::size_t M, std::size_t N, std::size_t Q);
  static GridSpec make_1d(std::size_t M, std::size_t Q) { return make(1, M, 1, Q); }
  static GridSpec make_2d(std::size_t M, std::size_t N, std::size_t Q) {
    return make(2, M, N, Q);
  }

  bool has_y() const { return d_spatial == 2; }
  std::size_t cells() const { return M * N * Q; }
  std::size_t spatial_cells() const { return M * N; }
  double cell_area() const { return dx * dy; }
  double cell_volume() const { return dx * dy * dt; }
  double x_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx; }
  double y_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * dy; }

  bool operator==(const GridSpec&) const = default;
};

// Primal unknown (m, n, rho) on x-, y- and t-faces:
//   m   : (M+1, N, Q)
//   n   : (M, N+1, Q), empty when d_spatial == 1
//   rho : (M, N, Q+1)
struct StaggeredField {
  Array3 m;
  Array3 n;
  Array3 rho;

  static StaggeredField zeros(const GridSpec& g);
  bool operator==(const StaggeredField&) const = default;
};

// (m, n, rho) collocated at cell centres, each (M, N, Q); n empty in 1D.
struct CenteredField {
  Array3 m;
  Array3 n;
  Array3 rho;

  static CenteredField zeros(const GridSpec& g);
  bool operator==(const CenteredField&) const = default;
};

// The six boundary slabs of a staggered field.
struct BoundaryData {
  Array2 flux_x0;       // (N, Q)
  Array2 flux_x1;       // (N, Q)
  Array2 flux_y0;       // (M, Q), empty in 1D
  Array2 flux_y1;       // (M, Q), empty in 1D
  Array2 rho_initial;   // (M, N)
  Array2 rho_terminal;  // (M, N)

  // Zero-flux boundary data with the given initial/terminal densities.
  static BoundaryData zero_flux(const GridSpec& g, Array2 mu, Array2 nu);
  bool operator==(const BoundaryData&) const = default;
};

// Throws ConfigError when the field does not match the grid.
void check_shape(const StaggeredField& u, const GridSpec& g);
void check_shape(const CenteredField& v, const GridSpec& g);
void check_shape(const BoundaryData& b, const GridSpec& g);

// Midpoint interpolation from faces to cell centres.
CenteredField interpolate(const StaggeredField& u, const GridSpec& g);
// Exact transpose of interpolate.
StaggeredField interpolate_adjoint(const CenteredField& v, const GridSpec& g);
// Space-time divergence at cell centres, shape (M, N, Q).
Array3 divergence(const StaggeredField& u, const GridSpec& g);

BoundaryData extract_boundary(const StaggeredField& u);
// Overwrites the boundary slabs with b0. Throws ConfigError when the initial
// and terminal masses differ by more than 1e-12 relative.
StaggeredField impose_boundary(StaggeredField u, const BoundaryData& b0);

// Power iteration on I^T I from a seeded random start; returns sqrt of the
// dominant eigenvalue estimate (the operator norm of interpolate).
double estimate_operator_norm(const GridSpec& g, int iters, std::uint64_t seed = 0);

// Sum of the initial/terminal density slabs times the cell area.
double boundary_mass_initial(const BoundaryData& b, const GridSpec& g);
double boundary_mass_terminal(const BoundaryData& b, const GridSpec& g);

// Euclidean vector-space helpers over all components.
double dot(const StaggeredField& a, const StaggeredField& b);
double dot(const CenteredField& a, const CenteredField& b);
double norm(const StaggeredField& a);
double max_abs(const Array3& a);
double max_abs(const StaggeredField& a);
// a <- a + s * b
void axpy(double s, const StaggeredField& b, StaggeredField& a);
void axpy(double s, const CenteredField& b, CenteredField& a);
void scale(double s, CenteredField& a);

// Serial reference kernels. Same arithmetic as the OpenMP kernels above, kept
// for cross-checking and benchmarking.
namespace serial {
CenteredField interpolate(const StaggeredField& u, const GridSpec& g);
StaggeredField interpolate_adjoint(const CenteredField& v, const GridSpec& g);
Array3 divergence(const StaggeredField& u, const GridSpec& g);
}  // namespace serial

}  // namespace syncot
