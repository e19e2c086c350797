#include "syncot/grid.hpp"

#include <cmath>
#include <random>
#include <string>

#include "syncot/error.hpp"

namespace syncot {

namespace {

std::string dims_str(const Array3& a) {
  return "(" + std::to_string(a.nx()) + "," + std::to_string(a.ny()) + "," +
         std::to_string(a.nz()) + ")";
}

void expect_dims(const Array3& a, std::size_t x, std::size_t y, std::size_t z,
                 const char* what) {
  if (a.nx() != x || a.ny() != y || a.nz() != z) {
    throw ConfigError(std::string("shape mismatch for ") + what + ": got " + dims_str(a) +
                      ", expected (" + std::to_string(x) + "," + std::to_string(y) + "," +
                      std::to_string(z) + ")");
  }
}

void expect_dims(const Array2& a, std::size_t x, std::size_t y, const char* what) {
  if (a.nx() != x || a.ny() != y) {
    throw ConfigError(std::string("shape mismatch for boundary slab ") + what);
  }
}

double sum(const Array2& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

}  // namespace

GridSpec GridSpec::make(int d_spatial, std::size_t M, std::size_t N, std::size_t Q) {
  if (d_spatial != 1 && d_spatial != 2) {
    throw ConfigError("d_spatial must be 1 or 2");
  }
  if (d_spatial == 1) N = 1;
  if (M < 2 || Q < 2 || (d_spatial == 2 && N < 2)) {
    throw ConfigError("grid counts must be >= 2 in every active dimension");
  }
  GridSpec g;
  g.d_spatial = d_spatial;
  g.M = M;
  g.N = N;
  g.Q = Q;
  g.dx = 1.0 / static_cast<double>(M);
  g.dy = 1.0 / static_cast<double>(N);
  g.dt = 1.0 / static_cast<double>(Q);
  return g;
}

StaggeredField StaggeredField::zeros(const GridSpec& g) {
  StaggeredField u;
  u.m = Array3(g.M + 1, g.N, g.Q);
  if (g.has_y()) u.n = Array3(g.M, g.N + 1, g.Q);
  u.rho = Array3(g.M, g.N, g.Q + 1);
  return u;
}

CenteredField CenteredField::zeros(const GridSpec& g) {
  CenteredField v;
  v.m = Array3(g.M, g.N, g.Q);
  if (g.has_y()) v.n = Array3(g.M, g.N, g.Q);
  v.rho = Array3(g.M, g.N, g.Q);
  return v;
}

BoundaryData BoundaryData::zero_flux(const GridSpec& g, Array2 mu, Array2 nu) {
  BoundaryData b;
  b.flux_x0 = Array2(g.N, g.Q);
  b.flux_x1 = Array2(g.N, g.Q);
  if (g.has_y()) {
    b.flux_y0 = Array2(g.M, g.Q);
    b.flux_y1 = Array2(g.M, g.Q);
  }
  b.rho_initial = std::move(mu);
  b.rho_terminal = std::move(nu);
  check_shape(b, g);
  return b;
}

void check_shape(const StaggeredField& u, const GridSpec& g) {
  expect_dims(u.m, g.M + 1, g.N, g.Q, "m");
  if (g.has_y()) {
    expect_dims(u.n, g.M, g.N + 1, g.Q, "n");
  } else if (!u.n.empty()) {
    throw ConfigError("1D staggered field must not carry n");
  }
  expect_dims(u.rho, g.M, g.N, g.Q + 1, "rho");
}

void check_shape(const CenteredField& v, const GridSpec& g) {
  expect_dims(v.m, g.M, g.N, g.Q, "centered m");
  if (g.has_y()) {
    expect_dims(v.n, g.M, g.N, g.Q, "centered n");
  } else if (!v.n.empty()) {
    throw ConfigError("1D centered field must not carry n");
  }
  expect_dims(v.rho, g.M, g.N, g.Q, "centered rho");
}

void check_shape(const BoundaryData& b, const GridSpec& g) {
  expect_dims(b.flux_x0, g.N, g.Q, "flux_x0");
  expect_dims(b.flux_x1, g.N, g.Q, "flux_x1");
  if (g.has_y()) {
    expect_dims(b.flux_y0, g.M, g.Q, "flux_y0");
    expect_dims(b.flux_y1, g.M, g.Q, "flux_y1");
  }
  expect_dims(b.rho_initial, g.M, g.N, "rho_initial");
  expect_dims(b.rho_terminal, g.M, g.N, "rho_terminal");
}

CenteredField interpolate(const StaggeredField& u, const GridSpec& g) {
  check_shape(u, g);
  CenteredField v = CenteredField::zeros(g);
  const std::size_t M = g.M, N = g.N, Q = g.Q;
  const std::size_t nq = N * Q;
  const std::size_t cells = M * N * Q;
  const double* m = u.m.data();
  double* mc = v.m.data();
  // m(i,j,k) and mc(i,j,k) share the linear index; m(i+1,j,k) is N*Q further.
#pragma omp parallel for schedule(static)
  for (std::size_t idx = 0; idx < cells; ++idx) {
    mc[idx] = 0.5 * (m[idx] + m[idx + nq]);
  }
  if (g.has_y()) {
    const double* n = u.n.data();
    double* nc = v.n.data();
#pragma omp parallel for schedule(static)
    for (std::size_t row = 0; row < M * N; ++row) {
      const std::size_t i = row / N, j = row % N;
      const double* lo = n + (i * (N + 1) + j) * Q;
      const double* hi = lo + Q;
      double* out = nc + row * Q;
      for (std::size_t k = 0; k < Q; ++k) out[k] = 0.5 * (lo[k] + hi[k]);
    }
  }
  const double* r = u.rho.data();
  double* rc = v.rho.data();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < M * N; ++row) {
    const double* in = r + row * (Q + 1);
    double* out = rc + row * Q;
    for (std::size_t k = 0; k < Q; ++k) out[k] = 0.5 * (in[k] + in[k + 1]);
  }
  return v;
}

StaggeredField interpolate_adjoint(const CenteredField& v, const GridSpec& g) {
  check_shape(v, g);
  StaggeredField u = StaggeredField::zeros(g);
  const std::size_t M = g.M, N = g.N, Q = g.Q;
  const std::size_t nq = N * Q;

  const double* mc = v.m.data();
  double* m = u.m.data();
#pragma omp parallel for schedule(static)
  for (std::size_t idx = 0; idx < (M + 1) * nq; ++idx) {
    if (idx < nq) {
      m[idx] = 0.5 * mc[idx];
    } else if (idx >= M * nq) {
      m[idx] = 0.5 * mc[idx - nq];
    } else {
      m[idx] = 0.5 * (mc[idx - nq] + mc[idx]);
    }
  }
  if (g.has_y()) {
    const double* nc = v.n.data();
    double* n = u.n.data();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j <= N; ++j) {
        double* out = n + (i * (N + 1) + j) * Q;
        const double* below = nc + (i * N + j - 1) * Q;
        const double* above = nc + (i * N + j) * Q;
        if (j == 0) {
          for (std::size_t k = 0; k < Q; ++k) out[k] = 0.5 * above[k];
        } else if (j == N) {
          for (std::size_t k = 0; k < Q; ++k) out[k] = 0.5 * below[k];
        } else {
          for (std::size_t k = 0; k < Q; ++k) out[k] = 0.5 * (below[k] + above[k]);
        }
      }
    }
  }
  const double* rc = v.rho.data();
  double* r = u.rho.data();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < M * N; ++row) {
    const double* in = rc + row * Q;
    double* out = r + row * (Q + 1);
    out[0] = 0.5 * in[0];
    for (std::size_t k = 1; k < Q; ++k) out[k] = 0.5 * (in[k - 1] + in[k]);
    out[Q] = 0.5 * in[Q - 1];
  }
  return u;
}

Array3 divergence(const StaggeredField& u, const GridSpec& g) {
  check_shape(u, g);
  const std::size_t M = g.M, N = g.N, Q = g.Q;
  const std::size_t nq = N * Q;
  Array3 div(M, N, Q);
  const double inv_dx = 1.0 / g.dx, inv_dy = 1.0 / g.dy, inv_dt = 1.0 / g.dt;
  const double* m = u.m.data();
  const double* n = g.has_y() ? u.n.data() : nullptr;
  const double* r = u.rho.data();
  double* out = div.data();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < M * N; ++row) {
    const std::size_t i = row / N, j = row % N;
    const double* m_lo = m + row * Q;
    const double* m_hi = m_lo + nq;
    const double* r_row = r + row * (Q + 1);
    double* o = out + row * Q;
    if (n != nullptr) {
      const double* n_lo = n + (i * (N + 1) + j) * Q;
      const double* n_hi = n_lo + Q;
      for (std::size_t k = 0; k < Q; ++k) {
        o[k] = (m_hi[k] - m_lo[k]) * inv_dx + (n_hi[k] - n_lo[k]) * inv_dy +
               (r_row[k + 1] - r_row[k]) * inv_dt;
      }
    } else {
      for (std::size_t k = 0; k < Q; ++k) {
        o[k] = (m_hi[k] - m_lo[k]) * inv_dx + (r_row[k + 1] - r_row[k]) * inv_dt;
      }
    }
  }
  return div;
}

BoundaryData extract_boundary(const StaggeredField& u) {
  const std::size_t M = u.rho.nx(), N = u.rho.ny(), Q = u.m.nz();
  BoundaryData b;
  b.flux_x0 = Array2(N, Q);
  b.flux_x1 = Array2(N, Q);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < Q; ++k) {
      b.flux_x0(j, k) = u.m(0, j, k);
      b.flux_x1(j, k) = u.m(M, j, k);
    }
  }
  if (!u.n.empty()) {
    b.flux_y0 = Array2(M, Q);
    b.flux_y1 = Array2(M, Q);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < Q; ++k) {
        b.flux_y0(i, k) = u.n(i, 0, k);
        b.flux_y1(i, k) = u.n(i, N, k);
      }
    }
  }
  b.rho_initial = Array2(M, N);
  b.rho_terminal = Array2(M, N);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      b.rho_initial(i, j) = u.rho(i, j, 0);
      b.rho_terminal(i, j) = u.rho(i, j, Q);
    }
  }
  return b;
}

StaggeredField impose_boundary(StaggeredField u, const BoundaryData& b0) {
  const std::size_t M = u.rho.nx(), N = u.rho.ny(), Q = u.m.nz();
  const double mu = sum(b0.rho_initial), nu = sum(b0.rho_terminal);
  const double scale = std::max({std::abs(mu), std::abs(nu), 1e-300});
  if (std::abs(mu - nu) > 1e-12 * scale) {
    throw ConfigError("boundary densities are not mass balanced: initial " +
                      std::to_string(mu) + " vs terminal " + std::to_string(nu));
  }
  expect_dims(b0.flux_x0, N, Q, "flux_x0");
  expect_dims(b0.flux_x1, N, Q, "flux_x1");
  expect_dims(b0.rho_initial, M, N, "rho_initial");
  expect_dims(b0.rho_terminal, M, N, "rho_terminal");
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < Q; ++k) {
      u.m(0, j, k) = b0.flux_x0(j, k);
      u.m(M, j, k) = b0.flux_x1(j, k);
    }
  }
  if (!u.n.empty()) {
    expect_dims(b0.flux_y0, M, Q, "flux_y0");
    expect_dims(b0.flux_y1, M, Q, "flux_y1");
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < Q; ++k) {
        u.n(i, 0, k) = b0.flux_y0(i, k);
        u.n(i, N, k) = b0.flux_y1(i, k);
      }
    }
  }
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      u.rho(i, j, 0) = b0.rho_initial(i, j);
      u.rho(i, j, Q) = b0.rho_terminal(i, j);
    }
  }
  return u;
}

double estimate_operator_norm(const GridSpec& g, int iters, std::uint64_t seed) {
  if (iters < 10) throw ConfigError("estimate_operator_norm needs at least 10 iterations");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  StaggeredField v = StaggeredField::zeros(g);
  for (double& x : v.m.values()) x = normal(rng);
  for (double& x : v.n.values()) x = normal(rng);
  for (double& x : v.rho.values()) x = normal(rng);
  double vv = dot(v, v);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const CenteredField iv = interpolate(v, g);
    lambda = dot(iv, iv) / vv;  // Rayleigh quotient of I^T I
    StaggeredField w = interpolate_adjoint(iv, g);
    const double wn = norm(w);
    if (wn == 0.0) break;
    const double inv = 1.0 / wn;
    for (double& x : w.m.values()) x *= inv;
    for (double& x : w.n.values()) x *= inv;
    for (double& x : w.rho.values()) x *= inv;
    v = std::move(w);
    vv = 1.0;
  }
  return std::sqrt(lambda);
}

double boundary_mass_initial(const BoundaryData& b, const GridSpec& g) {
  return sum(b.rho_initial) * g.cell_area();
}

double boundary_mass_terminal(const BoundaryData& b, const GridSpec& g) {
  return sum(b.rho_terminal) * g.cell_area();
}

namespace {
double dot_array(const Array3& a, const Array3& b) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
void axpy_array(double s, const Array3& b, Array3& a) {
  const std::size_t n = a.size();
  double* pa = a.data();
  const double* pb = b.data();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) pa[i] += s * pb[i];
}
}  // namespace

double dot(const StaggeredField& a, const StaggeredField& b) {
  return dot_array(a.m, b.m) + dot_array(a.n, b.n) + dot_array(a.rho, b.rho);
}

double dot(const CenteredField& a, const CenteredField& b) {
  return dot_array(a.m, b.m) + dot_array(a.n, b.n) + dot_array(a.rho, b.rho);
}

double norm(const StaggeredField& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Array3& a) {
  double r = 0.0;
  for (double v : a.values()) r = std::max(r, std::abs(v));
  return r;
}

double max_abs(const StaggeredField& a) {
  return std::max({max_abs(a.m), max_abs(a.n), max_abs(a.rho)});
}

void axpy(double s, const StaggeredField& b, StaggeredField& a) {
  axpy_array(s, b.m, a.m);
  axpy_array(s, b.n, a.n);
  axpy_array(s, b.rho, a.rho);
}

void axpy(double s, const CenteredField& b, CenteredField& a) {
  axpy_array(s, b.m, a.m);
  axpy_array(s, b.n, a.n);
  axpy_array(s, b.rho, a.rho);
}

void scale(double s, CenteredField& a) {
  for (double& v : a.m.values()) v *= s;
  for (double& v : a.n.values()) v *= s;
  for (double& v : a.rho.values()) v *= s;
}

}  // namespace syncot
