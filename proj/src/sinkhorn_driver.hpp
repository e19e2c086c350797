#pragma once

// Epsilon-scaling driver shared by the vectorized and the serial reference
// Sinkhorn kernels. A kernel provides the two log-domain half steps on the
// probability-normalized problem:
//   update_g(f, g, eps)           g_j = -eps LSE_i(log a_i + (f_i - C_ij) / eps)
//   update_f(g, f, eps, viol)     same for f; viol[i] = a_i |exp((f_old - f_new)/eps) - 1|
//   plan_cost(f, g, eps)          <P, C>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "syncot/discrete_ot.hpp"
#include "syncot/error.hpp"

namespace syncot::detail {

struct NormalizedPair {
  std::vector<double> a, b;          // probability weights
  std::vector<double> log_a, log_b;  // -inf where the weight is zero
  double mass = 0.0;                 // common mass used to rescale values
};

inline NormalizedPair normalize_pair(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                     const GroundCost& c) {
  if (static_cast<Eigen::Index>(a.size()) != c.rows() ||
      static_cast<Eigen::Index>(b.size()) != c.cols()) {
    throw InputError("measure sizes do not match the ground cost");
  }
  if (!(a.total_mass > 0.0) || !(b.total_mass > 0.0)) {
    throw InputError("Sinkhorn needs measures with positive mass");
  }
  const double scale = std::max(a.total_mass, b.total_mass);
  if (std::abs(a.total_mass - b.total_mass) > 1e-8 * scale) {
    throw InputError("Sinkhorn marginals have different masses: " + std::to_string(a.total_mass) +
                     " vs " + std::to_string(b.total_mass));
  }
  NormalizedPair n;
  n.mass = 0.5 * (a.total_mass + b.total_mass);
  auto fill = [](const DiscreteMeasure& m, std::vector<double>& w, std::vector<double>& lw) {
    w.resize(m.size());
    lw.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      w[i] = m.weights[i] / m.total_mass;
      lw[i] = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
    }
  };
  fill(a, n.a, n.log_a);
  fill(b, n.b, n.log_b);
  return n;
}

inline double serial_sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

template <class Kernel>
SinkhornResult run_sinkhorn(Kernel& kernel, const NormalizedPair& np, const GroundCost& c,
                            const SinkhornParams& p, const PotentialPair* warm,
                            bool want_plan_cost) {
  validate(p);
  const double target = p.resolve_epsilon(c);
  std::vector<double> f(np.a.size(), 0.0), g(np.b.size(), 0.0);
  const bool warm_ok = warm && warm->f.size() == f.size() && warm->g.size() == g.size();
  if (warm_ok) {
    f = warm->f;
    g = warm->g;
  }
  std::vector<double> viol(f.size(), 0.0);
  int total = 0;

  auto stage = [&](double eps, double tol, int cap) {
    double v = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cap; ++it) {
      kernel.update_g(f, g, eps);
      kernel.update_f(g, f, eps, viol);
      ++total;
      v = serial_sum(viol);
      if (!std::isfinite(v)) throw NumericalError("Sinkhorn produced a non-finite potential");
      if (v <= tol) break;
    }
    return v;
  };

  if (p.epsilon_scaling && !warm_ok) {
    double eps = c.max() / 10.0;
    while (eps > 2.0 * target) {
      stage(eps, std::max(p.tol, 1e-3), 200);
      eps *= 0.5;
    }
  }
  const int before = total;
  const double v = stage(target, p.tol, p.max_iters);
  if (v > p.tol) {
    throw ConvergenceError("Sinkhorn did not reach the marginal tolerance after " +
                               std::to_string(total - before) + " iterations (violation " +
                               std::to_string(v) + ")",
                           v);
  }

  SinkhornResult r;
  r.iters = total;
  r.violation = v;
  r.epsilon = target;
  // Rows are exact after the f half step, so the entropic term of the dual
  // objective vanishes.
  double dual = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) dual += f[i] * np.a[i];
  for (std::size_t j = 0; j < g.size(); ++j) dual += g[j] * np.b[j];
  r.w2sq_reg = np.mass * dual;
  if (want_plan_cost) r.transport_cost = np.mass * kernel.plan_cost(f, g, target);
  const double shift = serial_sum(f) / static_cast<double>(f.size());
  for (double& x : f) x -= shift;
  for (double& x : g) x += shift;
  r.potentials.f = std::move(f);
  r.potentials.g = std::move(g);
  r.potentials.centered = true;
  return r;
}

}  // namespace syncot::detail
