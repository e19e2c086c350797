#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "syncot/config.hpp"
#include "syncot/discrete_ot.hpp"
#include "syncot/error.hpp"
#include "syncot/problems.hpp"

using namespace syncot;

namespace {

double cell_mass(const Array2& d, const GridSpec& g) {
  double s = 0.0;
  for (double v : d.values()) s += v * g.cell_area();
  return s;
}

std::string all_presets_dump() {
  std::string out;
  for (const std::string& id : preset_ids()) out += "## " + id + "\n" + dump_config(load_preset(id));
  return out;
}

}  // namespace

TEST_CASE("truncated Gaussian marginals") {
  const GridSpec g = GridSpec::make_2d(16, 16, 4);
  const Array2 c = truncated_gaussian(0.5, 0.5, 0.1, g);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(c(i, j) - c(j, i)) <= 1e-14 * c(i, j));
  }
  CHECK(cell_mass(truncated_gaussian(0.3, 0.7, 0.1, g), g) == doctest::Approx(1.0).epsilon(1e-12));

  // Cell (4, 4) sits at (0.28125, 0.28125); corner cell at (1/32, 1/32).
  const Array2 p = truncated_gaussian(0.3, 0.3, 0.1, g);
  auto direct = [](double x, double y) {
    const double r2 = (x - 0.3) * (x - 0.3) + (y - 0.3) * (y - 0.3);
    return std::exp(-r2 / (2.0 * 0.01));
  };
  CHECK(p(4, 4) / p(0, 0) ==
        doctest::Approx(direct(0.28125, 0.28125) / direct(0.03125, 0.03125)).epsilon(1e-12));
  CHECK_THROWS_AS(truncated_gaussian(0.5, 0.5, 0.0, g), ConfigError);

  const GridSpec g1 = GridSpec::make_1d(20, 4);
  CHECK(cell_mass(truncated_gaussian(0.2, 0.9, 0.05, g1), g1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("map-induced couplings") {
  const GridSpec g = GridSpec::make_2d(2, 2, 2);
  MapSpec id;
  const CouplingOperator pi = coupling_from_map(id, g);
  CHECK(pi.kind() == CouplingOperator::Kind::identity);
  CHECK(pi.n_primary() == 4);
  CHECK(pi.n_secondary() == 4);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto r = static_cast<Eigen::Index>(i * 2 + j);
      CHECK(pi.secondary_points()(r, 0) == g.x_center(i));
      CHECK(pi.secondary_points()(r, 1) == g.y_center(j));
    }
  }
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  CHECK(pi.apply(x) == x);
  CHECK(pi.apply_transpose(x) == x);

  MapSpec q;
  q.variant = MapVariant::quadratic;
  const CouplingOperator pq = coupling_from_map(q, g);
  CHECK(pq.secondary_points()(0, 0) == doctest::Approx(0.0625));
  CHECK(pq.secondary_points()(3, 1) == doctest::Approx(0.5625));
  CHECK(pq.apply(x) == x);
}

TEST_CASE("every preset expands to compatible secondary marginals") {
  CHECK(preset_ids().size() == 7);
  for (const std::string& id : preset_ids()) {
    RunConfig cfg = load_preset(id);
    CHECK(cfg.preset == id);
    CHECK_NOTHROW(validate(cfg));
    // A coarser grid keeps the test quick; compatibility does not depend on it.
    cfg.problem.M = std::min<std::size_t>(cfg.problem.M, 12);
    if (cfg.problem.d_spatial == 2) cfg.problem.N = cfg.problem.M;
    const Problem p = build_problem(cfg);
    CHECK(cell_mass(p.mu, p.grid) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cell_mass(p.nu, p.grid) == doctest::Approx(1.0).epsilon(1e-12));
    const CouplingOperator pi = coupling_from_map(p.spec.map, p.grid);
    std::vector<double> a(p.mu.values()), b(p.nu.values());
    for (double& v : a) v *= p.grid.cell_area();
    for (double& v : b) v *= p.grid.cell_area();
    double ma = 0.0, mb = 0.0;
    for (double v : pi.apply(a)) ma += v;
    for (double v : pi.apply(b)) mb += v;
    CHECK(std::abs(ma - mb) <= 1e-12);
  }
  CHECK_THROWS_AS(load_preset("fig9"), ConfigError);
}

TEST_CASE("presets carry the published parameters") {
  const RunConfig f2 = load_preset("fig2_1d_quadratic");
  CHECK(f2.problem.d_spatial == 1);
  CHECK(f2.problem.map.variant == MapVariant::quadratic);
  CHECK(f2.problem.alpha.primary == 0.1);
  CHECK(f2.problem.alpha.secondary == 0.9);
  CHECK(f2.problem.M == 64);
  CHECK(f2.problem.Q == 32);

  const RunConfig f3 = load_preset("fig3a_bump");
  CHECK(f3.problem.map.variant == MapVariant::surface_gaussian_bump);
  CHECK(f3.problem.map.sigma == 0.15);
  CHECK(f3.problem.source.x0 == 0.3);
  CHECK(f3.problem.source.y0 == 0.3);
  CHECK(f3.problem.target.x0 == 0.7);
  CHECK(f3.problem.target.y0 == 0.7);
  CHECK(f3.problem.source.sigma == 0.1);
  CHECK(f3.problem.alpha.primary == 0.05);
  CHECK(f3.problem.M == 32);
  CHECK(f3.problem.Q == 16);

  const RunConfig f4 = load_preset("fig4b_cos_radial");
  CHECK(f4.problem.form == Form::kantorovich);
  CHECK(f4.problem.map.variant == MapVariant::surface_cos_radial);
  CHECK(f4.problem.source.x0 == 0.25);
  CHECK(f4.problem.source.y0 == 0.8);
  CHECK(f4.problem.target.x0 == 0.8);
  CHECK(f4.problem.target.y0 == 0.25);
  CHECK(f4.problem.target.sigma == 0.08);

  CHECK(load_preset("fig3b_sine").problem.map.variant == MapVariant::surface_sine);
  CHECK(load_preset("fig5a_magma_bump").problem.map.colormap == "magma");
  CHECK(load_preset("fig5b_cividis_waves").problem.map.field == ScalarFieldId::waves);
  CHECK(load_preset("fig4a_bump_kantorovich").problem.form == Form::kantorovich);
}

TEST_CASE("preset expansion matches the golden file") {
  std::ifstream in(std::string(SYNCOT_GOLDEN_DIR) + "/presets.txt", std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == all_presets_dump());
  CHECK(all_presets_dump() == all_presets_dump());
}

TEST_CASE("H through the map coupling tracks the kinetic secondary cost") {
  // A Gaussian translated at constant velocity v under the identity map: the
  // Monge secondary cost is |v|^2, and the debiased H should agree up to the
  // spatial discretization.
  const GridSpec base = GridSpec::make_2d(12, 12, 4);
  const CouplingOperator pi = coupling_from_map(MapSpec{}, base);
  const GroundCost c = GroundCost::squared_euclidean(pi.secondary_points());
  SinkhornParams sp;
  sp.epsilon_rel = 2e-3;
  sp.debias = true;
  sp.tol = 1e-9;
  const double v = 0.3;
  for (std::size_t Q : {4u, 8u}) {
    const GridSpec g = GridSpec::make_2d(12, 12, Q);
    Array3 rho(12, 12, Q + 1);
    for (std::size_t k = 0; k <= Q; ++k) {
      const Array2 s = truncated_gaussian(0.35 + v * static_cast<double>(k) * g.dt, 0.5, 0.1, g);
      for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t j = 0; j < 12; ++j) rho(i, j, k) = s(i, j);
      }
    }
    const double h = eval_H(rho, pi, c, sp, g);
    CHECK(h == doctest::Approx(v * v).epsilon(0.1));
  }
}

TEST_CASE("problem construction errors") {
  ProblemSpec s;
  s.M = s.N = 4;
  s.Q = 2;
  s.alpha = {0.5, 0.6};
  CHECK_THROWS_AS(build_problem(s), ConfigError);
  s.alpha = {1.0, 0.0};
  s.source.kind = MarginalSpec::Kind::from_file;
  s.source.path = "/nonexistent/marginal.sot";
  CHECK_THROWS(build_problem(s));
  CHECK(form_from_string("kantorovich") == Form::kantorovich);
  CHECK_THROWS_AS(form_from_string("static"), ConfigError);
}
