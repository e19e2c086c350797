#include "syncot/discrete_ot.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <utility>

#include "sinkhorn_driver.hpp"
#include "syncot/error.hpp"

namespace syncot {

DiscreteMeasure::DiscreteMeasure(std::vector<double> w) : weights(std::move(w)) {
  for (double x : weights) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("measure weights must be finite and >= 0");
    total_mass += x;
  }
}

GroundCost GroundCost::squared_euclidean(const Eigen::MatrixXd& points) {
  return squared_euclidean(points, points);
}

GroundCost GroundCost::squared_euclidean(const Eigen::MatrixXd& pa, const Eigen::MatrixXd& pb) {
  if (pa.cols() != pb.cols()) throw ConfigError("point sets live in different dimensions");
  Eigen::MatrixXd c(pa.rows(), pb.rows());
  for (Eigen::Index j = 0; j < pb.rows(); ++j) {
    for (Eigen::Index i = 0; i < pa.rows(); ++i) c(i, j) = (pa.row(i) - pb.row(j)).squaredNorm();
  }
  return from_matrix(std::move(c));
}

GroundCost GroundCost::from_matrix(Eigen::MatrixXd c) {
  if (c.size() == 0) throw InputError("empty ground cost");
  if (!c.allFinite() || c.minCoeff() < 0.0) throw InputError("ground cost must be finite and >= 0");
  GroundCost g;
  g.max_ = c.maxCoeff();
  g.ct_ = c.transpose();
  g.c_ = std::move(c);
  return g;
}

double SinkhornParams::resolve_epsilon(const GroundCost& c) const {
  if (epsilon > 0.0) return epsilon;
  const double e = epsilon_rel * c.max();
  // A zero cost matrix still needs a positive temperature.
  return e > 0.0 ? e : epsilon_rel;
}

void validate(const SinkhornParams& p) {
  if (p.epsilon < 0.0 || !(p.epsilon_rel > 0.0)) throw ConfigError("Sinkhorn epsilon must be positive");
  if (p.max_iters < 1) throw ConfigError("Sinkhorn max_iters must be >= 1");
  if (!(p.tol > 0.0)) throw ConfigError("Sinkhorn tol must be positive");
}

namespace {

// Scalings beyond this ratio are folded into the absorbed potentials.
constexpr double kAbsorbAt = 1e30;
// Kernel exponents are capped to keep K finite for poor warm starts.
constexpr double kMaxExponent = 700.0;
// Entries below exp(-345) are dropped: their products with the scalings
// would land in the subnormal range, which slows the matrix-vector products
// by two orders of magnitude.
constexpr double kMinExponent = -345.0;

class ScalingEngine {
 public:
  ScalingEngine(const detail::NormalizedPair& np, const GroundCost& c, SinkhornState& s)
      : c_(c), s_(s) {
    a_ = Eigen::Map<const Eigen::VectorXd>(np.a.data(), static_cast<Eigen::Index>(np.a.size()));
    b_ = Eigen::Map<const Eigen::VectorXd>(np.b.data(), static_cast<Eigen::Index>(np.b.size()));
  }

  bool resumable() const {
    return !s_.empty() && s_.kernel.rows() == c_.rows() && s_.kernel.cols() == c_.cols() &&
           s_.u.size() == c_.rows() && s_.v.size() == c_.cols();
  }

  void reset(double eps) {
    s_.f_abs = Eigen::VectorXd::Zero(c_.rows());
    s_.g_abs = Eigen::VectorXd::Zero(c_.cols());
    s_.u = Eigen::VectorXd::Ones(c_.rows());
    s_.v = Eigen::VectorXd::Ones(c_.cols());
    s_.epsilon = eps;
    rebuild();
  }

  void start_from(const PotentialPair& w, double eps) {
    s_.f_abs = Eigen::Map<const Eigen::VectorXd>(w.f.data(), c_.rows());
    s_.g_abs = Eigen::Map<const Eigen::VectorXd>(w.g.data(), c_.cols());
    s_.u = Eigen::VectorXd::Ones(c_.rows());
    s_.v = Eigen::VectorXd::Ones(c_.cols());
    s_.epsilon = eps;
    rebuild();
  }

  void set_epsilon(double eps) {
    if (eps == s_.epsilon) return;
    absorb();
    s_.epsilon = eps;
    rebuild();
  }

  // g half step then f half step. Returns sum_i a_i |u_old_i / u_new_i - 1|.
  double sweep() {
    Eigen::VectorXd d = s_.kernel.transpose() * a_.cwiseProduct(s_.u);
    std::vector<Eigen::Index> bad;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d[j] > 1e-290 && std::isfinite(d[j])) {
        s_.v[j] = 1.0 / d[j];
      } else {
        bad.push_back(j);
      }
    }
    if (!bad.empty()) repair_columns(bad);

    d = s_.kernel * b_.cwiseProduct(s_.v);
    double viol = 0.0;
    bad.clear();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d[i] > 1e-290 && std::isfinite(d[i])) {
        viol += a_[i] * std::abs(s_.u[i] * d[i] - 1.0);
        s_.u[i] = 1.0 / d[i];
      } else {
        viol += a_[i];
        bad.push_back(i);
      }
    }
    if (!bad.empty()) repair_rows(bad);
    maybe_absorb();
    return viol;
  }

  // Symmetric averaged step u <- sqrt(u / K(a u)) for OT(a, a).
  double sweep_self() {
    const Eigen::VectorXd d = s_.kernel * a_.cwiseProduct(s_.u);
    double viol = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d[i] > 1e-290) || !std::isfinite(d[i])) {
        throw NumericalError("symmetric Sinkhorn kernel row underflowed");
      }
      viol += a_[i] * std::abs(s_.u[i] * d[i] - 1.0);
      s_.u[i] = std::sqrt(s_.u[i] / d[i]);
    }
    s_.v = s_.u;
    maybe_absorb();
    return viol;
  }

  void potentials(std::vector<double>& f, std::vector<double>& g) const {
    f.resize(static_cast<std::size_t>(c_.rows()));
    g.resize(static_cast<std::size_t>(c_.cols()));
    for (Eigen::Index i = 0; i < c_.rows(); ++i) f[i] = s_.f_abs[i] + s_.epsilon * std::log(s_.u[i]);
    for (Eigen::Index j = 0; j < c_.cols(); ++j) g[j] = s_.g_abs[j] + s_.epsilon * std::log(s_.v[j]);
  }

  // <P, C> with P_ij = a_i u_i K_ij v_j b_j.
  double plan_cost() const {
    const Eigen::VectorXd au = a_.cwiseProduct(s_.u), bv = b_.cwiseProduct(s_.v);
    std::vector<double> partial(static_cast<std::size_t>(c_.cols()), 0.0);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < c_.cols(); ++j) {
      partial[j] = bv[j] * (s_.kernel.col(j).array() * c_.matrix().col(j).array() * au.array()).sum();
    }
    return detail::serial_sum(partial);
  }

 private:
  void rebuild() {
    const double inv = 1.0 / s_.epsilon;
    s_.kernel.resize(c_.rows(), c_.cols());
    const Eigen::Index cols = c_.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const Eigen::ArrayXd x =
          ((s_.f_abs.array() + s_.g_abs[j] - c_.matrix().col(j).array()) * inv).min(kMaxExponent);
      s_.kernel.col(j) = (x < kMinExponent).select(0.0, x.exp());
    }
  }

  void absorb() {
    for (Eigen::Index i = 0; i < s_.u.size(); ++i) s_.f_abs[i] += s_.epsilon * std::log(s_.u[i]);
    for (Eigen::Index j = 0; j < s_.v.size(); ++j) s_.g_abs[j] += s_.epsilon * std::log(s_.v[j]);
    s_.u.setOnes();
    s_.v.setOnes();
  }

  void maybe_absorb() {
    const double lo = 1.0 / kAbsorbAt;
    const bool big = s_.u.maxCoeff() > kAbsorbAt || s_.v.maxCoeff() > kAbsorbAt ||
                     s_.u.minCoeff() < lo || s_.v.minCoeff() < lo;
    if (big) {
      absorb();
      rebuild();
    }
  }

  // Columns whose kernel sum underflowed get the exact log-domain value.
  void repair_columns(const std::vector<Eigen::Index>& cols) {
    for (Eigen::Index j : cols) s_.v[j] = 1.0;
    absorb();
    const double inv = 1.0 / s_.epsilon;
    for (Eigen::Index j : cols) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < c_.rows(); ++i) {
        if (a_[i] > 0.0) mx = std::max(mx, std::log(a_[i]) + (s_.f_abs[i] - c_.matrix()(i, j)) * inv);
      }
      double sum = 0.0;
      for (Eigen::Index i = 0; i < c_.rows(); ++i) {
        if (a_[i] > 0.0) sum += std::exp(std::log(a_[i]) + (s_.f_abs[i] - c_.matrix()(i, j)) * inv - mx);
      }
      s_.g_abs[j] = -s_.epsilon * (mx + std::log(sum));
    }
    rebuild();
  }

  void repair_rows(const std::vector<Eigen::Index>& rows) {
    for (Eigen::Index i : rows) s_.u[i] = 1.0;
    absorb();
    const double inv = 1.0 / s_.epsilon;
    for (Eigen::Index i : rows) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < c_.cols(); ++j) {
        if (b_[j] > 0.0) mx = std::max(mx, std::log(b_[j]) + (s_.g_abs[j] - c_.matrix()(i, j)) * inv);
      }
      double sum = 0.0;
      for (Eigen::Index j = 0; j < c_.cols(); ++j) {
        if (b_[j] > 0.0) sum += std::exp(std::log(b_[j]) + (s_.g_abs[j] - c_.matrix()(i, j)) * inv - mx);
      }
      s_.f_abs[i] = -s_.epsilon * (mx + std::log(sum));
    }
    rebuild();
  }

  const GroundCost& c_;
  SinkhornState& s_;
  Eigen::VectorXd a_, b_;
};

// Epsilon scaling on a cold start: geometric halving from max(C)/10 with a
// loose tolerance, then the target stage with the requested tolerance.
template <class Sweep>
std::pair<double, int> run_stages(ScalingEngine& e, const GroundCost& c, const SinkhornParams& p,
                                  double target, bool cold, Sweep sweep) {
  int total = 0;
  auto stage = [&](double tol, int cap) {
    double v = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cap; ++it) {
      v = sweep();
      ++total;
      if (!std::isfinite(v)) throw NumericalError("Sinkhorn produced a non-finite potential");
      if (v <= tol) break;
    }
    return v;
  };
  if (cold && p.epsilon_scaling) {
    double eps = c.max() / 10.0;
    e.reset(eps);
    while (eps > 2.0 * target) {
      stage(std::max(p.tol, 1e-3), 200);
      eps *= 0.5;
      e.set_epsilon(eps);
    }
    e.set_epsilon(target);
  } else if (cold) {
    e.reset(target);
  } else {
    e.set_epsilon(target);
  }
  const int before = total;
  const double v = stage(p.tol, p.max_iters);
  if (v > p.tol) {
    throw ConvergenceError("Sinkhorn did not reach the marginal tolerance after " +
                               std::to_string(total - before) + " iterations (violation " +
                               std::to_string(v) + ")",
                           v);
  }
  return {v, total};
}

SinkhornResult finish(const detail::NormalizedPair& np, std::vector<double> f, std::vector<double> g,
                      double violation, int iters, double eps) {
  SinkhornResult r;
  r.iters = iters;
  r.violation = violation;
  r.epsilon = eps;
  // Rows are exact after the f half step, so the entropic term of the dual
  // objective vanishes.
  double dual = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) dual += f[i] * np.a[i];
  for (std::size_t j = 0; j < g.size(); ++j) dual += g[j] * np.b[j];
  r.w2sq_reg = np.mass * dual;
  const double shift = detail::serial_sum(f) / static_cast<double>(f.size());
  for (double& x : f) x -= shift;
  for (double& x : g) x += shift;
  r.potentials.f = std::move(f);
  r.potentials.g = std::move(g);
  r.potentials.centered = true;
  return r;
}

SinkhornResult sinkhorn_impl(const DiscreteMeasure& a, const DiscreteMeasure& b,
                             const GroundCost& c, const SinkhornParams& p, SinkhornState& state,
                             const PotentialPair* warm, bool want_plan_cost) {
  validate(p);
  const detail::NormalizedPair np = detail::normalize_pair(a, b, c);
  const double target = p.resolve_epsilon(c);
  ScalingEngine e(np, c, state);
  bool cold = !e.resumable();
  if (warm && warm->f.size() == np.a.size() && warm->g.size() == np.b.size()) {
    e.start_from(*warm, target);
    cold = false;
  }
  const auto [v, iters] = run_stages(e, c, p, target, cold, [&] { return e.sweep(); });
  std::vector<double> f, g;
  e.potentials(f, g);
  SinkhornResult r = finish(np, std::move(f), std::move(g), v, iters, target);
  if (want_plan_cost) r.transport_cost = np.mass * e.plan_cost();
  return r;
}

std::vector<double> centered(std::vector<double> v) {
  const double s = detail::serial_sum(v) / static_cast<double>(v.size());
  for (double& x : v) x -= s;
  return v;
}

}  // namespace

SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p,
                            const PotentialPair* warm) {
  SinkhornState state;
  return sinkhorn_impl(a, b, c, p, state, warm, true);
}

SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p, SinkhornState& state) {
  return sinkhorn_impl(a, b, c, p, state, nullptr, true);
}

SinkhornResult sinkhorn_self(const DiscreteMeasure& a, const GroundCost& c,
                             const SinkhornParams& p, SinkhornState& state) {
  validate(p);
  if (c.rows() != c.cols()) throw InputError("self transport needs a square ground cost");
  const detail::NormalizedPair np = detail::normalize_pair(a, a, c);
  const double target = p.resolve_epsilon(c);
  ScalingEngine e(np, c, state);
  const auto [v, iters] = run_stages(e, c, p, target, !e.resumable(), [&] { return e.sweep_self(); });
  std::vector<double> f, g;
  e.potentials(f, g);
  SinkhornResult r;
  r.iters = iters;
  r.violation = v;
  r.epsilon = target;
  double dual = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) dual += f[i] * np.a[i];
  r.w2sq_reg = np.mass * 2.0 * dual;
  r.transport_cost = np.mass * e.plan_cost();
  r.potentials.f = centered(std::move(f));
  r.potentials.g = r.potentials.f;
  r.potentials.centered = true;
  return r;
}

W2Grad w2sq_grad(const DiscreteMeasure& a, const DiscreteMeasure& b, const GroundCost& c,
                 const SinkhornParams& p, const PotentialPair* warm,
                 PotentialPair* out_potentials) {
  SinkhornState state;
  SinkhornResult r = sinkhorn_impl(a, b, c, p, state, warm, false);
  W2Grad out;
  out.w2sq = r.w2sq_reg;
  out.grad_a = centered(r.potentials.f);
  out.grad_b = centered(r.potentials.g);
  if (out_potentials) *out_potentials = std::move(r.potentials);
  return out;
}

namespace {

// Secondary slice measures xi_k = Pi (lambda_k max(rho_k, 0) area) with
// lambda_k = m / s_k: negative densities are dropped and each slice is
// rescaled to the mean raw mass m so the Sinkhorn marginals balance exactly.
struct Slices {
  std::vector<DiscreteMeasure> xi;
  std::vector<std::vector<double>> shape;  // clamped cell masses / s_k
  std::vector<double> lambda;
};

Slices slice_measures(const Array3& rho, const CouplingOperator& pi, const GridSpec& g) {
  const std::size_t n = g.M * g.N, slices = g.Q + 1;
  if (rho.nx() != g.M || rho.ny() != g.N || rho.nz() != slices) {
    throw ConfigError("grad_H expects rho on t-faces with shape (M, N, Q+1)");
  }
  if (pi.n_primary() != n) throw ConfigError("coupling does not match the primary grid");
  const double area = g.cell_area();
  std::vector<double> raw(slices, 0.0);
  std::vector<std::vector<double>> clamped(slices, std::vector<double>(n));
  for (std::size_t k = 0; k < slices; ++k) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = rho[c * slices + k];
      raw[k] += v * area;
      clamped[k][c] = v > 0.0 ? v * area : 0.0;
    }
  }
  for (std::size_t k = 0; k < slices; ++k) {
    if (!(raw[k] > 0.0)) throw InputError("slice " + std::to_string(k) + " has no positive mass");
  }
  for (std::size_t k = 0; k + 1 < slices; ++k) {
    const double scale = std::max(raw[k], raw[k + 1]);
    if (std::abs(raw[k] - raw[k + 1]) > 1e-6 * scale) {
      throw NumericalError("slice masses differ between t-faces " + std::to_string(k) + " and " +
                           std::to_string(k + 1));
    }
  }
  const double mean = detail::serial_sum(raw) / static_cast<double>(slices);
  Slices out;
  out.xi.reserve(slices);
  for (std::size_t k = 0; k < slices; ++k) {
    const double s = detail::serial_sum(clamped[k]);
    std::vector<double> shape = clamped[k];
    for (double& x : shape) x /= s;
    std::vector<double> x = shape;
    for (double& v : x) v *= mean;
    out.xi.emplace_back(pi.apply(x));
    out.shape.push_back(std::move(shape));
    out.lambda.push_back(mean / s);
  }
  return out;
}

struct TermResults {
  std::vector<SinkhornResult> pairs;  // (k, k+1)
  std::vector<SinkhornResult> selfs;  // (k, k), debiasing only
};

// Solves every pair (and self term) independently; OpenMP spreads them over
// threads, the first failure is rethrown after the loop.
TermResults solve_terms(const std::vector<DiscreteMeasure>& xi, const GroundCost& cost,
                        const SinkhornParams& p, std::size_t Q, SinkhornCache* cache) {
  SinkhornCache local;
  SinkhornCache& cc = cache ? *cache : local;
  if (cc.pairs.size() != Q) cc.pairs.assign(Q, {});
  const std::size_t n_self = p.debias ? Q + 1 : 0;
  if (cc.selfs.size() != n_self) cc.selfs.assign(n_self, {});
  TermResults out;
  out.pairs.resize(Q);
  out.selfs.resize(n_self);
  const auto jobs = static_cast<long>(Q + n_self);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long t = 0; t < jobs; ++t) {
    try {
      const auto k = static_cast<std::size_t>(t);
      if (k < Q) {
        out.pairs[k] = sinkhorn_impl(xi[k], xi[k + 1], cost, p, cc.pairs[k], nullptr, false);
      } else {
        out.selfs[k - Q] = sinkhorn_self(xi[k - Q], cost, p, cc.selfs[k - Q]);
      }
    } catch (...) {
#pragma omp critical(syncot_h_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double h_value(const TermResults& t, double dt) {
  double value = 0.0;
  for (std::size_t k = 0; k < t.pairs.size(); ++k) {
    double term = t.pairs[k].w2sq_reg;
    if (!t.selfs.empty()) term -= 0.5 * (t.selfs[k].w2sq_reg + t.selfs[k + 1].w2sq_reg);
    value += term / dt;
  }
  return value;
}

}  // namespace

HGrad grad_H(const Array3& rho, const CouplingOperator& pi, const GroundCost& cost,
             const SinkhornParams& p, const GridSpec& g, SinkhornCache* cache) {
  const Slices sl = slice_measures(rho, pi, g);
  const TermResults t = solve_terms(sl.xi, cost, p, g.Q, cache);
  const std::size_t n = g.M * g.N, slices = g.Q + 1;
  HGrad out;
  out.value = h_value(t, g.dt);
  // Secondary potential per slice, summed over the terms the slice enters.
  std::vector<std::vector<double>> phi(slices, std::vector<double>(cost.rows(), 0.0));
  for (std::size_t k = 0; k < g.Q; ++k) {
    const auto& f = t.pairs[k].potentials.f;
    const auto& gg = t.pairs[k].potentials.g;
    for (std::size_t i = 0; i < f.size(); ++i) phi[k][i] += f[i];
    for (std::size_t j = 0; j < gg.size(); ++j) phi[k + 1][j] += gg[j];
    if (p.debias) {
      for (std::size_t i = 0; i < f.size(); ++i) phi[k][i] -= t.selfs[k].potentials.f[i];
      for (std::size_t j = 0; j < gg.size(); ++j) phi[k + 1][j] -= t.selfs[k + 1].potentials.f[j];
    }
  }
  // Chain rule through the rescaling: d/d rho_c = area lambda_k (phi_c -
  // <phi, shape_k>), where phi is pulled back by Pi^T. The constant from the
  // mean mass is dropped since feasible directions keep slice masses. This is
  // the gradient at max(rho, 0), one-sided at zero, so it stays continuous
  // across the clamp.
  out.grad = Array3(g.M, g.N, slices);
  const double w = g.cell_area() / g.dt;
  for (std::size_t k = 0; k < slices; ++k) {
    const std::vector<double> back = pi.apply_transpose(phi[k]);
    double mean_phi = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean_phi += back[c] * sl.shape[k][c];
    for (std::size_t c = 0; c < n; ++c) {
      out.grad[c * slices + k] = w * sl.lambda[k] * (back[c] - mean_phi);
    }
  }
  return out;
}

double eval_H(const Array3& rho, const CouplingOperator& pi, const GroundCost& cost,
              const SinkhornParams& p, const GridSpec& g, SinkhornCache* cache) {
  return h_value(solve_terms(slice_measures(rho, pi, g).xi, cost, p, g.Q, cache), g.dt);
}

}  // namespace syncot
