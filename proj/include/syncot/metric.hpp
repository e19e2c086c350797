#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "syncot/grid.hpp"

namespace syncot {

enum class MapVariant {
  identity,
  quadratic,              // x -> x^2 componentwise
  sigmoid,                // x -> 1 / (1 + exp(-10 (x - 0.5))) componentwise
  surface_gaussian_bump,  // (x, y) -> (x, y, exp(-|x - c|^2 / (2 sigma^2)))
  surface_sine,           // (x, y) -> (x, y, sin(2 pi x) sin(2 pi y))
  surface_cos_radial,     // (x, y) -> (x, y, -0.5 cos(5 sqrt(x^5 + y^5)))
  colormap,               // x -> RGB(colormap(normalized scalar field(x)))
  tabulated,              // bilinear interpolation of sampled values
};

enum class ScalarFieldId {
  gaussian,  // exp(-((x-0.5)^2 + (y-0.5)^2) / 0.15^2), range [0, 1]
  waves,     // sin^10(6x) + cos(10 + 36xy) cos(6x), range [-1, 2]
};

// Map values sampled on a uniform grid spanning [0,1]^d, endpoints included.
// values is row-major (nx, ny, codim); ny == 1 for 1D maps.
struct TabulatedMap {
  int domain_dim = 2;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t codim = 0;
  std::vector<double> values;
};

struct MapSpec {
  MapVariant variant = MapVariant::identity;
  int domain_dim = 2;
  double sigma = 0.15;            // surface_gaussian_bump width
  std::string colormap = "magma"; // "magma" or "cividis"
  ScalarFieldId field = ScalarFieldId::gaussian;
  double fd_step = 1.0 / 512.0;   // finite-difference step for colormap/tabulated
  std::shared_ptr<const TabulatedMap> table;

  std::size_t codomain_dim() const;
  bool has_analytic_jacobian() const {
    return variant != MapVariant::colormap && variant != MapVariant::tabulated;
  }
};

const char* to_string(MapVariant v);
MapVariant map_variant_from_string(const std::string& s);
const char* to_string(ScalarFieldId f);
ScalarFieldId scalar_field_from_string(const std::string& s);

// T(x). Throws DomainError for tabulated maps queried outside [0,1]^d.
Eigen::VectorXd eval_map(const MapSpec& spec, std::span<const double> x);
// dT/dx, shape codomain_dim x domain_dim. Analytic for builtin variants,
// central differences (one-sided at the boundary) for colormap/tabulated.
Eigen::MatrixXd eval_jacobian(const MapSpec& spec, std::span<const double> x);
// Finite-difference Jacobian with step h for any variant.
Eigen::MatrixXd fd_jacobian(const MapSpec& spec, std::span<const double> x, double h);

// RGB value of a named colormap at s in [0,1] (clamped), linear interpolation
// between the 256 table entries.
Eigen::Vector3d colormap_rgb(const std::string& name, double s);
// Scalar field value normalized to [0,1] by its analytic range.
double scalar_field_normalized(ScalarFieldId f, double x, double y);

struct Alpha {
  double primary = 1.0;
  double secondary = 0.0;
  bool operator==(const Alpha&) const = default;
};

// Throws ConfigError unless alpha >= 0 and primary + secondary == 1 (1e-12).
void validate_alpha(const Alpha& a);

struct Sym2 {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;
};

// Per-cell metric A = a1 I + a2 (dT)^T (dT), sampled at spatial cell centres
// and constant in time. In 1D only a11 is meaningful; a12 = 0, a22 = 1.
class MetricField {
 public:
  MetricField() = default;
  MetricField(const GridSpec& g, Alpha alpha);

  int d() const { return d_; }
  std::size_t M() const { return M_; }
  std::size_t N() const { return N_; }
  const Alpha& alpha() const { return alpha_; }

  const Sym2& a(std::size_t i, std::size_t j) const { return a_[i * N_ + j]; }
  Sym2& a(std::size_t i, std::size_t j) { return a_[i * N_ + j]; }
  // Unweighted (dT)^T (dT).
  const Sym2& pullback(std::size_t i, std::size_t j) const { return g_[i * N_ + j]; }
  Sym2& pullback(std::size_t i, std::size_t j) { return g_[i * N_ + j]; }
  const Sym2& a_cell(std::size_t cell_row) const { return a_[cell_row]; }

  // Metric with a constant matrix everywhere (A = alpha.primary * I when
  // pullback is the identity). Used by the Kantorovich form.
  static MetricField scaled_identity(const GridSpec& g, Alpha alpha);

 private:
  int d_ = 2;
  std::size_t M_ = 0;
  std::size_t N_ = 0;
  Alpha alpha_;
  std::vector<Sym2> a_;
  std::vector<Sym2> g_;
};

MetricField build_metric_field(const MapSpec& spec, Alpha alpha, const GridSpec& g);

struct KineticCost {
  double total = 0.0;             // dx dy dt sum J(m, rho; A)
  double cost_primary = 0.0;      // same with A -> a1 I
  double cost_secondary = 0.0;    // same with A -> a2 (dT)^T (dT)
  double energy_primary = 0.0;    // unweighted kinetic energy in the primary space
  double energy_secondary = 0.0;  // unweighted kinetic energy in the secondary space
  bool infinite = false;          // some cell had rho <= 0 with (m, rho) != (0, 0)
};

KineticCost kinetic_cost(const CenteredField& v, const MetricField& a, const GridSpec& g);

}  // namespace syncot
