// Serial cell loop for prox_J, index-by-index.
#include "syncot/proxops.hpp"

namespace syncot {

namespace serial {

CenteredField prox_J(const CenteredField& v, const MetricField& a, const ProxParams& p) {
  validate(p);
  CenteredField out = v;
  const bool has_y = !v.n.empty();
  for (std::size_t i = 0; i < v.m.nx(); ++i) {
    for (std::size_t j = 0; j < v.m.ny(); ++j) {
      for (std::size_t k = 0; k < v.m.nz(); ++k) {
        const ProxCell c =
            prox_J_cell({v.m(i, j, k), has_y ? v.n(i, j, k) : 0.0}, v.rho(i, j, k), a.a(i, j), p);
        out.m(i, j, k) = c.m[0];
        if (has_y) out.n(i, j, k) = c.m[1];
        out.rho(i, j, k) = c.rho;
      }
    }
  }
  return out;
}

}  // namespace serial

}  // namespace syncot
