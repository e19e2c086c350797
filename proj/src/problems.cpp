#include "syncot/problems.hpp"

#include <cmath>

#include "syncot/error.hpp"
#include "syncot/field_io.hpp"

namespace syncot {

const char* to_string(Form f) { return f == Form::monge ? "monge" : "kantorovich"; }

Form form_from_string(const std::string& s) {
  if (s == "monge") return Form::monge;
  if (s == "kantorovich") return Form::kantorovich;
  throw ConfigError("unknown problem form '" + s + "'");
}

Array2 truncated_gaussian(double x0, double y0, double sigma, const GridSpec& g) {
  if (!(sigma > 0.0)) throw ConfigError("Gaussian sigma must be positive");
  Array2 p(g.M, g.N);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (std::size_t i = 0; i < g.M; ++i) {
    const double dx = g.x_center(i) - x0;
    for (std::size_t j = 0; j < g.N; ++j) {
      const double dy = g.has_y() ? g.y_center(j) - y0 : 0.0;
      p(i, j) = std::exp(-(dx * dx + dy * dy) * inv);
      total += p(i, j);
    }
  }
  const double scale = 1.0 / (total * g.cell_area());
  for (double& v : p.values()) v *= scale;
  return p;
}

CouplingOperator coupling_from_map(const MapSpec& spec, const GridSpec& g) {
  const auto n = static_cast<Eigen::Index>(g.M * g.N);
  Eigen::MatrixXd pts(n, static_cast<Eigen::Index>(spec.codomain_dim()));
  for (std::size_t i = 0; i < g.M; ++i) {
    for (std::size_t j = 0; j < g.N; ++j) {
      std::vector<double> x{g.x_center(i)};
      if (g.has_y()) x.push_back(g.y_center(j));
      pts.row(static_cast<Eigen::Index>(i * g.N + j)) = eval_map(spec, x).transpose();
    }
  }
  return CouplingOperator::identity(std::move(pts));
}

namespace {

Array2 resolve_marginal(const MarginalSpec& m, const GridSpec& g) {
  if (m.kind == MarginalSpec::Kind::truncated_gaussian) {
    return truncated_gaussian(m.x0, m.y0, m.sigma, g);
  }
  const FieldArray f = read_field(m.path);
  std::size_t nx = 0, ny = 1;
  if (f.dims.size() == 2) {
    nx = f.dims[0];
    ny = f.dims[1];
  } else if (f.dims.size() == 1) {
    nx = f.dims[0];
  } else {
    throw InputError("marginal file " + m.path + " must hold a rank 1 or 2 array");
  }
  if (nx != g.M || ny != g.N) {
    throw InputError("marginal file " + m.path + " does not match the grid");
  }
  Array2 out(g.M, g.N);
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(f.data[i] >= 0.0)) throw InputError("marginal file " + m.path + " has negative values");
    out[i] = f.data[i];
    total += f.data[i];
  }
  if (!(total > 0.0)) throw InputError("marginal file " + m.path + " has zero mass");
  const double scale = 1.0 / (total * g.cell_area());
  for (double& v : out.values()) v *= scale;
  return out;
}

}  // namespace

Problem build_problem(const ProblemSpec& spec) {
  validate_alpha(spec.alpha);
  if (!(spec.alpha.primary > 0.0)) {
    throw ConfigError("alpha1 must be positive so that the metric is positive definite");
  }
  Problem p;
  p.spec = spec;
  p.grid = GridSpec::make(spec.d_spatial, spec.M, spec.N, spec.Q);
  p.spec.N = p.grid.N;
  p.spec.map.domain_dim = spec.d_spatial;
  p.mu = resolve_marginal(spec.source, p.grid);
  p.nu = resolve_marginal(spec.target, p.grid);
  p.boundary = BoundaryData::zero_flux(p.grid, p.mu, p.nu);
  if (spec.form == Form::monge) {
    p.metric = build_metric_field(p.spec.map, spec.alpha, p.grid);
  } else {
    p.metric = MetricField::scaled_identity(p.grid, spec.alpha);
    p.coupling = coupling_from_map(p.spec.map, p.grid);
    p.secondary_cost = GroundCost::squared_euclidean(p.coupling.secondary_points());
    // Secondary marginals must carry equal mass.
    const double area = p.grid.cell_area();
    std::vector<double> a(p.mu.values()), b(p.nu.values());
    for (double& v : a) v *= area;
    for (double& v : b) v *= area;
    double ma = 0.0, mb = 0.0;
    for (double v : p.coupling.apply(a)) ma += v;
    for (double v : p.coupling.apply(b)) mb += v;
    if (std::abs(ma - mb) > 1e-12 * std::max(ma, mb)) {
      throw ConfigError("secondary marginals have different mass under the coupling");
    }
  }
  return p;
}

}  // namespace syncot
