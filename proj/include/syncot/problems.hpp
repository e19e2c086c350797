#pragma once

#include <string>
#include <vector>

#include "syncot/coupling.hpp"
#include "syncot/discrete_ot.hpp"
#include "syncot/grid.hpp"
#include "syncot/metric.hpp"

namespace syncot {

enum class Form { monge, kantorovich };

const char* to_string(Form f);
Form form_from_string(const std::string& s);

struct MarginalSpec {
  enum class Kind { truncated_gaussian, from_file };
  Kind kind = Kind::truncated_gaussian;
  double x0 = 0.5;
  double y0 = 0.5;  // ignored in 1D
  double sigma = 0.1;
  std::string path;  // SOT1 file with an (M, N) density array

  bool operator==(const MarginalSpec&) const = default;
};

// Declarative problem description; resolved against a grid by build_problem.
struct ProblemSpec {
  int d_spatial = 2;
  std::size_t M = 32;
  std::size_t N = 32;
  std::size_t Q = 16;
  Form form = Form::monge;
  Alpha alpha{1.0, 0.0};
  MarginalSpec source;
  MarginalSpec target;
  MapSpec map;
};

struct Problem {
  ProblemSpec spec;
  GridSpec grid;
  Array2 mu;  // densities on the spatial cells; cell masses sum to 1
  Array2 nu;
  BoundaryData boundary;
  MetricField metric;            // Monge: alpha1 I + alpha2 dT^T dT; Kantorovich: alpha1 I
  CouplingOperator coupling;     // Kantorovich only
  GroundCost secondary_cost;     // Kantorovich only
};

// Truncated Gaussian density at the cell centres, scaled so the cell masses
// (density times cell area) sum to one. In 1D y0 is unused.
Array2 truncated_gaussian(double x0, double y0, double sigma, const GridSpec& g);

// Each primary cell sends its mass to the image of its centre.
CouplingOperator coupling_from_map(const MapSpec& spec, const GridSpec& g);

Problem build_problem(const ProblemSpec& spec);

}  // namespace syncot
