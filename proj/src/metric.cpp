#include "syncot/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "colormap_tables.hpp"
#include "syncot/error.hpp"

namespace syncot {

namespace {

constexpr double kPi = std::numbers::pi;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-10.0 * (x - 0.5))); }

void require_2d(const MapSpec& spec) {
  if (spec.domain_dim != 2) {
    throw ConfigError(std::string("map variant ") + to_string(spec.variant) +
                      " is only defined on a 2D primary space");
  }
}

void check_point(const MapSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.domain_dim) {
    throw ConfigError("map evaluated at a point of the wrong dimension");
  }
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

Eigen::VectorXd eval_tabulated(const TabulatedMap& tab, std::span<const double> x) {
  constexpr double kSlack = 1e-12;
  for (double xi : x) {
    if (!(xi >= -kSlack && xi <= 1.0 + kSlack)) {
      throw DomainError("tabulated map queried outside its sample hull [0,1]^d");
    }
  }
  auto locate = [](double xi, std::size_t n, std::size_t& i0, double& t) {
    if (n < 2) {
      i0 = 0;
      t = 0.0;
      return;
    }
    const double pos = std::clamp(xi, 0.0, 1.0) * static_cast<double>(n - 1);
    i0 = std::min(static_cast<std::size_t>(pos), n - 2);
    t = pos - static_cast<double>(i0);
  };
  std::size_t i0 = 0, j0 = 0;
  double tx = 0.0, ty = 0.0;
  locate(x[0], tab.nx, i0, tx);
  if (tab.domain_dim == 2) locate(x[1], tab.ny, j0, ty);
  const std::size_t c = tab.codim;
  auto at = [&](std::size_t i, std::size_t j, std::size_t r) {
    return tab.values[(i * tab.ny + j) * c + r];
  };
  Eigen::VectorXd out(static_cast<Eigen::Index>(c));
  const std::size_t i1 = tab.nx > 1 ? i0 + 1 : i0;
  const std::size_t j1 = (tab.domain_dim == 2 && tab.ny > 1) ? j0 + 1 : j0;
  for (std::size_t r = 0; r < c; ++r) {
    const double lo = lerp(at(i0, j0, r), at(i1, j0, r), tx);
    const double hi = lerp(at(i0, j1, r), at(i1, j1, r), tx);
    out[static_cast<Eigen::Index>(r)] = lerp(lo, hi, ty);
  }
  return out;
}

}  // namespace

const char* to_string(MapVariant v) {
  switch (v) {
    case MapVariant::identity: return "identity";
    case MapVariant::quadratic: return "quadratic";
    case MapVariant::sigmoid: return "sigmoid";
    case MapVariant::surface_gaussian_bump: return "surface_gaussian_bump";
    case MapVariant::surface_sine: return "surface_sine";
    case MapVariant::surface_cos_radial: return "surface_cos_radial";
    case MapVariant::colormap: return "colormap";
    case MapVariant::tabulated: return "tabulated";
  }
  return "?";
}

MapVariant map_variant_from_string(const std::string& s) {
  for (auto v : {MapVariant::identity, MapVariant::quadratic, MapVariant::sigmoid,
                 MapVariant::surface_gaussian_bump, MapVariant::surface_sine,
                 MapVariant::surface_cos_radial, MapVariant::colormap, MapVariant::tabulated}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown map variant '" + s + "'");
}

const char* to_string(ScalarFieldId f) {
  return f == ScalarFieldId::gaussian ? "gaussian" : "waves";
}

ScalarFieldId scalar_field_from_string(const std::string& s) {
  if (s == "gaussian") return ScalarFieldId::gaussian;
  if (s == "waves") return ScalarFieldId::waves;
  throw ConfigError("unknown scalar field '" + s + "'");
}

std::size_t MapSpec::codomain_dim() const {
  switch (variant) {
    case MapVariant::identity:
    case MapVariant::quadratic:
    case MapVariant::sigmoid:
      return static_cast<std::size_t>(domain_dim);
    case MapVariant::surface_gaussian_bump:
    case MapVariant::surface_sine:
    case MapVariant::surface_cos_radial:
    case MapVariant::colormap:
      return 3;
    case MapVariant::tabulated:
      return table ? table->codim : 0;
  }
  return 0;
}

Eigen::Vector3d colormap_rgb(const std::string& name, double s) {
  const std::array<std::array<double, 3>, 256>* table = nullptr;
  if (name == "magma") {
    table = &detail::k_magma;
  } else if (name == "cividis") {
    table = &detail::k_cividis;
  } else {
    throw ConfigError("unknown colormap '" + name + "'");
  }
  const double pos = std::clamp(s, 0.0, 1.0) * 255.0;
  const std::size_t i0 = std::min<std::size_t>(static_cast<std::size_t>(pos), 254);
  const double t = pos - static_cast<double>(i0);
  const auto& lo = (*table)[i0];
  const auto& hi = (*table)[i0 + 1];
  return {lerp(lo[0], hi[0], t), lerp(lo[1], hi[1], t), lerp(lo[2], hi[2], t)};
}

double scalar_field_normalized(ScalarFieldId f, double x, double y) {
  if (f == ScalarFieldId::gaussian) {
    const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
    return std::exp(-r2 / (0.15 * 0.15));
  }
  const double v = std::pow(std::sin(6.0 * x), 10) + std::cos(10.0 + 36.0 * x * y) * std::cos(6.0 * x);
  return (v + 1.0) / 3.0;
}

Eigen::VectorXd eval_map(const MapSpec& spec, std::span<const double> x) {
  check_point(spec, x);
  const auto d = static_cast<Eigen::Index>(spec.domain_dim);
  switch (spec.variant) {
    case MapVariant::identity: {
      Eigen::VectorXd out(d);
      for (Eigen::Index i = 0; i < d; ++i) out[i] = x[static_cast<std::size_t>(i)];
      return out;
    }
    case MapVariant::quadratic: {
      Eigen::VectorXd out(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        out[i] = xi * xi;
      }
      return out;
    }
    case MapVariant::sigmoid: {
      Eigen::VectorXd out(d);
      for (Eigen::Index i = 0; i < d; ++i) out[i] = sigmoid(x[static_cast<std::size_t>(i)]);
      return out;
    }
    case MapVariant::surface_gaussian_bump: {
      require_2d(spec);
      const double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
      return Eigen::Vector3d(x[0], x[1], std::exp(-r2 / (2.0 * spec.sigma * spec.sigma)));
    }
    case MapVariant::surface_sine: {
      require_2d(spec);
      return Eigen::Vector3d(x[0], x[1], std::sin(2.0 * kPi * x[0]) * std::sin(2.0 * kPi * x[1]));
    }
    case MapVariant::surface_cos_radial: {
      require_2d(spec);
      const double s = std::sqrt(std::max(0.0, std::pow(x[0], 5) + std::pow(x[1], 5)));
      return Eigen::Vector3d(x[0], x[1], -0.5 * std::cos(5.0 * s));
    }
    case MapVariant::colormap: {
      require_2d(spec);
      return colormap_rgb(spec.colormap, scalar_field_normalized(spec.field, x[0], x[1]));
    }
    case MapVariant::tabulated: {
      if (!spec.table) throw ConfigError("tabulated map without a table");
      if (spec.table->domain_dim != spec.domain_dim) {
        throw ConfigError("tabulated map dimension does not match its domain");
      }
      return eval_tabulated(*spec.table, x);
    }
  }
  throw ConfigError("unhandled map variant");
}

Eigen::MatrixXd fd_jacobian(const MapSpec& spec, std::span<const double> x, double h) {
  check_point(spec, x);
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  const auto d = static_cast<Eigen::Index>(spec.domain_dim);
  const auto c = static_cast<Eigen::Index>(spec.codomain_dim());
  Eigen::MatrixXd jac(c, d);
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  for (Eigen::Index col = 0; col < d; ++col) {
    const auto ci = static_cast<std::size_t>(col);
    const double xi = x[ci];
    double lo = xi - h, hi = xi + h;
    if (lo < 0.0) lo = xi;  // forward difference at the left edge
    if (hi > 1.0) hi = xi;  // backward difference at the right edge
    xp[ci] = hi;
    xm[ci] = lo;
    jac.col(col) = (eval_map(spec, xp) - eval_map(spec, xm)) / (hi - lo);
    xp[ci] = xi;
    xm[ci] = xi;
  }
  return jac;
}

Eigen::MatrixXd eval_jacobian(const MapSpec& spec, std::span<const double> x) {
  check_point(spec, x);
  const auto d = static_cast<Eigen::Index>(spec.domain_dim);
  switch (spec.variant) {
    case MapVariant::identity:
      return Eigen::MatrixXd::Identity(d, d);
    case MapVariant::quadratic: {
      Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) j(i, i) = 2.0 * x[static_cast<std::size_t>(i)];
      return j;
    }
    case MapVariant::sigmoid: {
      Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double s = sigmoid(x[static_cast<std::size_t>(i)]);
        j(i, i) = 10.0 * s * (1.0 - s);
      }
      return j;
    }
    case MapVariant::surface_gaussian_bump: {
      require_2d(spec);
      const double s2 = spec.sigma * spec.sigma;
      const double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
      const double z = std::exp(-r2 / (2.0 * s2));
      Eigen::MatrixXd j(3, 2);
      j << 1.0, 0.0, 0.0, 1.0, -(x[0] - 0.5) / s2 * z, -(x[1] - 0.5) / s2 * z;
      return j;
    }
    case MapVariant::surface_sine: {
      require_2d(spec);
      const double sx = std::sin(2.0 * kPi * x[0]), cx = std::cos(2.0 * kPi * x[0]);
      const double sy = std::sin(2.0 * kPi * x[1]), cy = std::cos(2.0 * kPi * x[1]);
      Eigen::MatrixXd j(3, 2);
      j << 1.0, 0.0, 0.0, 1.0, 2.0 * kPi * cx * sy, 2.0 * kPi * sx * cy;
      return j;
    }
    case MapVariant::surface_cos_radial: {
      require_2d(spec);
      const double p = std::max(0.0, std::pow(x[0], 5) + std::pow(x[1], 5));
      const double s = std::sqrt(p);
      Eigen::MatrixXd j(3, 2);
      double zx = 0.0, zy = 0.0;
      if (s > 0.0) {
        // z = -0.5 cos(5 s), ds/dx = 5 x^4 / (2 s)
        const double dz_ds = 2.5 * std::sin(5.0 * s);
        zx = dz_ds * 5.0 * std::pow(x[0], 4) / (2.0 * s);
        zy = dz_ds * 5.0 * std::pow(x[1], 4) / (2.0 * s);
      }
      j << 1.0, 0.0, 0.0, 1.0, zx, zy;
      return j;
    }
    case MapVariant::colormap:
    case MapVariant::tabulated:
      return fd_jacobian(spec, x, spec.fd_step);
  }
  throw ConfigError("unhandled map variant");
}

void validate_alpha(const Alpha& a) {
  if (!(a.primary >= 0.0) || !(a.secondary >= 0.0)) {
    throw ConfigError("alpha weights must be nonnegative");
  }
  if (std::abs(a.primary + a.secondary - 1.0) > 1e-12) {
    throw ConfigError("alpha must lie on the simplex: alpha1 + alpha2 = 1 (got " +
                      std::to_string(a.primary + a.secondary) + ")");
  }
}

MetricField::MetricField(const GridSpec& g, Alpha alpha)
    : d_(g.d_spatial), M_(g.M), N_(g.N), alpha_(alpha), a_(g.M * g.N), g_(g.M * g.N) {}

MetricField MetricField::scaled_identity(const GridSpec& g, Alpha alpha) {
  MetricField f(g, alpha);
  for (std::size_t c = 0; c < g.M * g.N; ++c) {
    f.g_[c] = Sym2{1.0, 0.0, 1.0};
    f.a_[c] = Sym2{alpha.primary, 0.0, g.has_y() ? alpha.primary : 1.0};
  }
  return f;
}

MetricField build_metric_field(const MapSpec& spec, Alpha alpha, const GridSpec& g) {
  validate_alpha(alpha);
  if (!(alpha.primary > 0.0)) {
    throw ConfigError("alpha1 must be positive so that the metric is positive definite");
  }
  if (spec.domain_dim != g.d_spatial) {
    throw ConfigError("map domain dimension does not match the grid");
  }
  MetricField f(g, alpha);
  for (std::size_t i = 0; i < g.M; ++i) {
    for (std::size_t j = 0; j < g.N; ++j) {
      std::vector<double> x{g.x_center(i)};
      if (g.has_y()) x.push_back(g.y_center(j));
      const Eigen::MatrixXd jac = eval_jacobian(spec, x);
      Eigen::MatrixXd jtj = jac.transpose() * jac;
      jtj = 0.5 * (jtj + jtj.transpose()).eval();
      Sym2 pb;
      Sym2 a;
      if (g.has_y()) {
        pb = Sym2{jtj(0, 0), jtj(0, 1), jtj(1, 1)};
        a = Sym2{alpha.primary + alpha.secondary * pb.a11, alpha.secondary * pb.a12,
                 alpha.primary + alpha.secondary * pb.a22};
      } else {
        pb = Sym2{jtj(0, 0), 0.0, 1.0};
        a = Sym2{alpha.primary + alpha.secondary * pb.a11, 0.0, 1.0};
      }
      f.pullback(i, j) = pb;
      f.a(i, j) = a;
    }
  }
  return f;
}

namespace {

double quad(const Sym2& s, double m, double n) {
  return s.a11 * m * m + 2.0 * s.a12 * m * n + s.a22 * n * n;
}

struct CostPartial {
  double total = 0.0;
  double primary = 0.0;
  double secondary = 0.0;
  bool infinite = false;
};

}  // namespace

KineticCost kinetic_cost(const CenteredField& v, const MetricField& a, const GridSpec& g) {
  check_shape(v, g);
  const std::size_t rows = g.M * g.N, Q = g.Q;
  const bool has_y = g.has_y();
  std::vector<CostPartial> partial(rows);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const Sym2& A = a.a_cell(row);
    const std::size_t i = row / g.N, j = row % g.N;
    const Sym2& G = a.pullback(i, j);
    CostPartial p;
    for (std::size_t k = 0; k < Q; ++k) {
      const std::size_t idx = row * Q + k;
      const double m = v.m[idx];
      const double n = has_y ? v.n[idx] : 0.0;
      const double r = v.rho[idx];
      if (r > 0.0) {
        p.total += quad(A, m, n) / r;
        p.primary += (m * m + n * n) / r;
        p.secondary += (has_y ? quad(G, m, n) : G.a11 * m * m) / r;
      } else if (!(m == 0.0 && n == 0.0 && r == 0.0)) {
        p.infinite = true;
      }
    }
    partial[row] = p;
  }
  KineticCost c;
  for (const CostPartial& p : partial) {
    c.total += p.total;
    c.energy_primary += p.primary;
    c.energy_secondary += p.secondary;
    c.infinite = c.infinite || p.infinite;
  }
  const double vol = g.cell_volume();
  c.total *= vol;
  c.energy_primary *= vol;
  c.energy_secondary *= vol;
  c.cost_primary = a.alpha().primary * c.energy_primary;
  c.cost_secondary = a.alpha().secondary * c.energy_secondary;
  if (c.infinite) c.total = std::numeric_limits<double>::infinity();
  return c;
}

}  // namespace syncot
