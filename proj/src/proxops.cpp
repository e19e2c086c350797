#include "syncot/proxops.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "syncot/error.hpp"

namespace syncot {

namespace {

// A = V diag(lambda) V^T with V = [[c, -s], [s, c]].
struct Eig2 {
  double l1 = 1.0, l2 = 1.0;
  double c = 1.0, s = 0.0;
};

Eig2 eig_sym2(const Sym2& a) {
  Eig2 e;
  const double mean = 0.5 * (a.a11 + a.a22);
  const double half = 0.5 * (a.a11 - a.a22);
  const double rad = std::hypot(half, a.a12);
  e.l1 = mean + rad;
  e.l2 = mean - rad;
  if (a.a12 == 0.0) {
    if (a.a11 >= a.a22) {
      e.c = 1.0;
      e.s = 0.0;
    } else {
      e.c = 0.0;
      e.s = 1.0;
    }
    return e;
  }
  // Eigenvector of l1: (a12, l1 - a11) or (l1 - a22, a12); take the better
  // conditioned of the two.
  double vx = a.a12, vy = e.l1 - a.a11;
  const double ux = e.l1 - a.a22, uy = a.a12;
  if (std::hypot(ux, uy) > std::hypot(vx, vy)) {
    vx = ux;
    vy = uy;
  }
  const double nrm = std::hypot(vx, vy);
  e.c = vx / nrm;
  e.s = vy / nrm;
  return e;
}

struct PhiTerms {
  double tau;
  double rho;
  double l[2];
  double w2[2];

  double phi(double r) const {
    double s = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double d = 2.0 * tau * l[i] + r;
      s += l[i] * w2[i] / (d * d);
    }
    return rho + tau * s;
  }
  // psi'(r) = 1 - phi'(r) = 1 + 2 tau sum l w^2 / (2 tau l + r)^3
  double dpsi(double r) const {
    double s = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double d = 2.0 * tau * l[i] + r;
      s += l[i] * w2[i] / (d * d * d);
    }
    return 1.0 + 2.0 * tau * s;
  }
};

}  // namespace

void validate(const ProxParams& p) {
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw ConfigError("prox step tau must be positive");
  if (!(p.fp_tol > 0.0)) throw ConfigError("fp_tol must be positive");
  if (p.fp_max_iters < 10) throw ConfigError("fp_max_iters must be at least 10");
}

ProxCell prox_J_cell(std::array<double, 2> m, double rho, const Sym2& a, const ProxParams& p) {
  const Eig2 e = eig_sym2(a);
  if (!(e.l2 > 0.0) || !std::isfinite(e.l1)) {
    throw ConfigError("metric matrix is not symmetric positive definite");
  }
  const double w1 = e.c * m[0] + e.s * m[1];
  const double w2 = -e.s * m[0] + e.c * m[1];
  ProxCell out;
  if (w1 == 0.0 && w2 == 0.0) {
    out.rho = rho > 0.0 ? rho : 0.0;
    return out;
  }
  const double tau = p.tau;
  const PhiTerms t{tau, rho, {e.l1, e.l2}, {w1 * w1, w2 * w2}};
  const double phi0 = rho + w1 * w1 / (4.0 * tau * e.l1) + w2 * w2 / (4.0 * tau * e.l2);
  if (phi0 <= 0.0) return out;

  // psi = r - phi(r) is increasing and concave with psi(0) < 0 and
  // psi(phi0) >= 0, so Newton started left of the root climbs monotonically.
  // Bisection guards against rounding pushing an iterate outside the bracket.
  double lo = std::max(0.0, rho), hi = phi0;
  double r = lo;
  bool done = false;
  for (int it = 0; it < p.fp_max_iters; ++it) {
    const double psi = r - t.phi(r);
    if (std::abs(psi) <= p.fp_tol) {
      done = true;
      break;
    }
    if (psi < 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    double next = r - psi / t.dpsi(r);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == r || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      done = true;
      break;
    }
    r = next;
  }
  if (!done) {
    throw NumericalError("prox root finder did not converge within fp_max_iters");
  }
  const double s1 = r / (2.0 * tau * e.l1 + r) * w1;
  const double s2 = r / (2.0 * tau * e.l2 + r) * w2;
  out.m[0] = e.c * s1 - e.s * s2;
  out.m[1] = e.s * s1 + e.c * s2;
  out.rho = r;
  return out;
}

FixedPointTrace prox_fixed_point(std::array<double, 2> m, double rho, const Sym2& a,
                                 const ProxParams& p, double rho_start) {
  const Eig2 e = eig_sym2(a);
  const double w1 = e.c * m[0] + e.s * m[1];
  const double w2 = -e.s * m[0] + e.c * m[1];
  const PhiTerms t{p.tau, rho, {e.l1, e.l2}, {w1 * w1, w2 * w2}};
  FixedPointTrace tr;
  double r = rho_start;
  for (tr.iters = 1; tr.iters <= p.fp_max_iters; ++tr.iters) {
    const double next = t.phi(r);
    if (!std::isfinite(next)) break;
    if (std::abs(next - r) <= p.fp_tol) {
      tr.rho = next;
      tr.converged = true;
      return tr;
    }
    r = next;
  }
  tr.rho = r;
  return tr;
}

CenteredField prox_J(const CenteredField& v, const MetricField& a, const ProxParams& p) {
  validate(p);
  CenteredField out = v;
  const std::size_t Q = v.m.nz();
  const std::size_t rows = v.m.nx() * v.m.ny();
  const bool has_y = !v.n.empty();
  // Exceptions may not escape an OpenMP region; remember the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const Sym2& A = a.a_cell(row);
    for (std::size_t k = 0; k < Q; ++k) {
      const std::size_t idx = row * Q + k;
      try {
        const ProxCell c =
            prox_J_cell({v.m[idx], has_y ? v.n[idx] : 0.0}, v.rho[idx], A, p);
        out.m[idx] = c.m[0];
        if (has_y) out.n[idx] = c.m[1];
        out.rho[idx] = c.rho;
      } catch (...) {
#pragma omp critical(syncot_prox_error)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

CenteredField prox_J_conj(const CenteredField& v, const MetricField& a, double tau,
                          const ProxParams& inner) {
  if (!(tau > 0.0)) throw ConfigError("prox_J_conj needs tau > 0");
  CenteredField scaled = v;
  scale(1.0 / tau, scaled);
  ProxParams p = inner;
  p.tau = 1.0 / tau;
  const CenteredField pr = prox_J(scaled, a, p);
  CenteredField out = v;
  axpy(-tau, pr, out);
  return out;
}

}  // namespace syncot
