// Serial reference versions of the grid operators, written index-by-index
// straight from the stencil definitions.
#include "syncot/grid.hpp"

namespace syncot::serial {

CenteredField interpolate(const StaggeredField& u, const GridSpec& g) {
  check_shape(u, g);
  CenteredField v = CenteredField::zeros(g);
  for (std::size_t i = 0; i < g.M; ++i) {
    for (std::size_t j = 0; j < g.N; ++j) {
      for (std::size_t k = 0; k < g.Q; ++k) {
        v.m(i, j, k) = 0.5 * (u.m(i, j, k) + u.m(i + 1, j, k));
        if (g.has_y()) v.n(i, j, k) = 0.5 * (u.n(i, j, k) + u.n(i, j + 1, k));
        v.rho(i, j, k) = 0.5 * (u.rho(i, j, k) + u.rho(i, j, k + 1));
      }
    }
  }
  return v;
}

StaggeredField interpolate_adjoint(const CenteredField& v, const GridSpec& g) {
  check_shape(v, g);
  StaggeredField u = StaggeredField::zeros(g);
  const std::size_t M = g.M, N = g.N, Q = g.Q;
  for (std::size_t i = 0; i <= M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < Q; ++k) {
        if (i == 0) {
          u.m(i, j, k) = 0.5 * v.m(i, j, k);
        } else if (i == M) {
          u.m(i, j, k) = 0.5 * v.m(i - 1, j, k);
        } else {
          u.m(i, j, k) = 0.5 * (v.m(i - 1, j, k) + v.m(i, j, k));
        }
      }
    }
  }
  if (g.has_y()) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j <= N; ++j) {
        for (std::size_t k = 0; k < Q; ++k) {
          if (j == 0) {
            u.n(i, j, k) = 0.5 * v.n(i, j, k);
          } else if (j == N) {
            u.n(i, j, k) = 0.5 * v.n(i, j - 1, k);
          } else {
            u.n(i, j, k) = 0.5 * (v.n(i, j - 1, k) + v.n(i, j, k));
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k <= Q; ++k) {
        if (k == 0) {
          u.rho(i, j, k) = 0.5 * v.rho(i, j, k);
        } else if (k == Q) {
          u.rho(i, j, k) = 0.5 * v.rho(i, j, k - 1);
        } else {
          u.rho(i, j, k) = 0.5 * (v.rho(i, j, k - 1) + v.rho(i, j, k));
        }
      }
    }
  }
  return u;
}

Array3 divergence(const StaggeredField& u, const GridSpec& g) {
  check_shape(u, g);
  Array3 div(g.M, g.N, g.Q);
  const double inv_dx = 1.0 / g.dx, inv_dy = 1.0 / g.dy, inv_dt = 1.0 / g.dt;
  for (std::size_t i = 0; i < g.M; ++i) {
    for (std::size_t j = 0; j < g.N; ++j) {
      for (std::size_t k = 0; k < g.Q; ++k) {
        const double dm = (u.m(i + 1, j, k) - u.m(i, j, k)) * inv_dx;
        const double dr = (u.rho(i, j, k + 1) - u.rho(i, j, k)) * inv_dt;
        if (g.has_y()) {
          const double dn = (u.n(i, j + 1, k) - u.n(i, j, k)) * inv_dy;
          div(i, j, k) = dm + dn + dr;
        } else {
          div(i, j, k) = dm + dr;
        }
      }
    }
  }
  return div;
}

}  // namespace syncot::serial
