#include <map>

#include "syncot/config.hpp"
#include "syncot/error.hpp"

namespace syncot {

namespace {

MarginalSpec gaussian(double x0, double y0, double sigma) {
  MarginalSpec m;
  m.kind = MarginalSpec::Kind::truncated_gaussian;
  m.x0 = x0;
  m.y0 = y0;
  m.sigma = sigma;
  return m;
}

RunConfig monge_base(const std::string& id) {
  RunConfig c;
  c.preset = id;
  c.problem.form = Form::monge;
  c.solver.algorithm = Algorithm::chambolle_pock;
  c.solver.stop_tol = 1e-6;
  c.output.dir = "run_" + id;
  return c;
}

RunConfig kantorovich_base(const std::string& id) {
  RunConfig c = monge_base(id);
  c.problem.form = Form::kantorovich;
  c.solver.algorithm = Algorithm::yan;
  c.solver.max_iters = 1000;
  c.solver.stop_tol = 1e-5;
  c.solver.sinkhorn.tol = 1e-6;
  c.solver.sinkhorn.epsilon_rel = 1e-2;
  c.solver.sinkhorn.debias = true;
  return c;
}

RunConfig fig2() {
  RunConfig c = monge_base("fig2_1d_quadratic");
  c.problem.d_spatial = 1;
  c.problem.M = 64;
  c.problem.N = 1;
  c.problem.Q = 32;
  c.problem.alpha = {0.1, 0.9};
  c.problem.source = gaussian(0.2, 0.5, 0.05);
  c.problem.target = gaussian(0.8, 0.5, 0.05);
  c.problem.map.variant = MapVariant::quadratic;
  return c;
}

RunConfig fig3a() {
  RunConfig c = monge_base("fig3a_bump");
  c.problem.alpha = {0.05, 0.95};
  c.problem.source = gaussian(0.3, 0.3, 0.1);
  c.problem.target = gaussian(0.7, 0.7, 0.1);
  c.problem.map.variant = MapVariant::surface_gaussian_bump;
  c.problem.map.sigma = 0.15;
  return c;
}

RunConfig fig3b() {
  RunConfig c = fig3a();
  c.preset = "fig3b_sine";
  c.output.dir = "run_fig3b_sine";
  c.problem.alpha = {0.95, 0.05};
  c.problem.map.variant = MapVariant::surface_sine;
  return c;
}

RunConfig fig4a() {
  RunConfig c = kantorovich_base("fig4a_bump_kantorovich");
  const RunConfig m = fig3a();
  c.problem.alpha = m.problem.alpha;
  c.problem.source = m.problem.source;
  c.problem.target = m.problem.target;
  c.problem.map = m.problem.map;
  return c;
}

RunConfig fig4b() {
  RunConfig c = kantorovich_base("fig4b_cos_radial");
  c.problem.alpha = {0.05, 0.95};
  c.problem.source = gaussian(0.25, 0.8, 0.08);
  c.problem.target = gaussian(0.8, 0.25, 0.08);
  c.problem.map.variant = MapVariant::surface_cos_radial;
  return c;
}

RunConfig fig5(const std::string& id, const std::string& cmap, ScalarFieldId field,
               MarginalSpec src, MarginalSpec dst) {
  RunConfig c = kantorovich_base(id);
  c.problem.alpha = {0.05, 0.95};
  c.problem.source = src;
  c.problem.target = dst;
  c.problem.map.variant = MapVariant::colormap;
  c.problem.map.colormap = cmap;
  c.problem.map.field = field;
  return c;
}

const std::map<std::string, RunConfig (*)()>& registry() {
  static const std::map<std::string, RunConfig (*)()> r = {
      {"fig2_1d_quadratic", &fig2},
      {"fig3a_bump", &fig3a},
      {"fig3b_sine", &fig3b},
      {"fig4a_bump_kantorovich", &fig4a},
      {"fig4b_cos_radial", &fig4b},
      {"fig5a_magma_bump",
       [] {
         return fig5("fig5a_magma_bump", "magma", ScalarFieldId::gaussian, gaussian(0.25, 0.5, 0.08),
                     gaussian(0.75, 0.5, 0.08));
       }},
      {"fig5b_cividis_waves",
       [] {
         return fig5("fig5b_cividis_waves", "cividis", ScalarFieldId::waves,
                     gaussian(0.25, 0.25, 0.08), gaussian(0.75, 0.75, 0.08));
       }},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& preset_ids() {
  static const std::vector<std::string> ids = {
      "fig2_1d_quadratic", "fig3a_bump",        "fig3b_sine",          "fig4a_bump_kantorovich",
      "fig4b_cos_radial",  "fig5a_magma_bump", "fig5b_cividis_waves",
  };
  return ids;
}

RunConfig load_preset(const std::string& id) {
  const auto it = registry().find(id);
  if (it == registry().end()) throw ConfigError("unknown preset '" + id + "'");
  return it->second();
}

}  // namespace syncot
