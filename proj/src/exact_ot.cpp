// Exact discrete OT by the transportation simplex. Intended for test-sized
// instances only (dense reduced-cost scan per pivot).
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "syncot/discrete_ot.hpp"
#include "syncot/error.hpp"

namespace syncot {

namespace {

struct Basis {
  std::size_t m, n;
  Eigen::MatrixXd x;                 // flows
  std::vector<std::vector<char>> in; // basic indicator

  // Node ids: rows 0..m-1, columns m..m+n-1.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m + n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (in[i][j]) {
          adj[i].push_back(m + j);
          adj[m + j].push_back(i);
        }
      }
    }
    return adj;
  }
};

void compute_duals(const Basis& b, const Eigen::MatrixXd& c, std::vector<double>& u,
                   std::vector<double>& v) {
  const auto adj = b.adjacency();
  std::vector<char> seen(b.m + b.n, 0);
  u.assign(b.m, 0.0);
  v.assign(b.n, 0.0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    const std::size_t node = q.front();
    q.pop();
    for (std::size_t nb : adj[node]) {
      if (seen[nb]) continue;
      seen[nb] = 1;
      if (node < b.m) {
        const std::size_t j = nb - b.m;
        v[j] = c(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(j)) - u[node];
      } else {
        const std::size_t j = node - b.m;
        u[nb] = c(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(j)) - v[j];
      }
      q.push(nb);
    }
  }
}

// Tree path from column node (m + j) to row node i, as a list of node ids.
std::vector<std::size_t> tree_path(const Basis& b, std::size_t from, std::size_t to) {
  const auto adj = b.adjacency();
  std::vector<std::size_t> parent(b.m + b.n, std::numeric_limits<std::size_t>::max());
  std::queue<std::size_t> q;
  q.push(from);
  parent[from] = from;
  while (!q.empty()) {
    const std::size_t node = q.front();
    q.pop();
    if (node == to) break;
    for (std::size_t nb : adj[node]) {
      if (parent[nb] != std::numeric_limits<std::size_t>::max()) continue;
      parent[nb] = node;
      q.push(nb);
    }
  }
  if (parent[to] == std::numeric_limits<std::size_t>::max()) {
    throw NumericalError("transportation simplex basis is not a spanning tree");
  }
  std::vector<std::size_t> path{to};
  while (path.back() != from) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

ExactOtResult exact_ot_small(const DiscreteMeasure& a, const DiscreteMeasure& b,
                             const GroundCost& c) {
  const std::size_t m = a.size(), n = b.size();
  if (static_cast<Eigen::Index>(m) != c.rows() || static_cast<Eigen::Index>(n) != c.cols()) {
    throw InputError("measure sizes do not match the ground cost");
  }
  if (m == 0 || n == 0 || m > 64 || n > 64) throw InputError("exact_ot_small supports 1..64 points");
  const double scale = std::max(a.total_mass, b.total_mass);
  if (!(scale > 0.0) || std::abs(a.total_mass - b.total_mass) > 1e-12 * scale) {
    throw InputError("exact OT marginals must have equal positive mass");
  }
  const Eigen::MatrixXd& cost = c.matrix();

  Basis basis{m, n, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)),
              std::vector<std::vector<char>>(m, std::vector<char>(n, 0))};
  // North-west corner. Exactly m + n - 1 basic cells; a degenerate step keeps
  // a zero-flow basic cell so the basis stays a spanning tree.
  std::vector<double> supply = a.weights, demand = b.weights;
  for (double& d : demand) d *= a.total_mass / b.total_mass;
  std::size_t i = 0, j = 0;
  while (i < m && j < n) {
    const double t = std::min(supply[i], demand[j]);
    basis.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t;
    basis.in[i][j] = 1;
    supply[i] -= t;
    demand[j] -= t;
    if (i + 1 == m) {
      ++j;
    } else if (j + 1 == n) {
      ++i;
    } else if (supply[i] <= demand[j]) {
      ++i;
    } else {
      ++j;
    }
  }

  const double tol = 1e-13 * std::max(1.0, c.max());
  std::vector<double> u, v;
  const int max_pivots = 100000;
  int pivots = 0;
  for (;; ++pivots) {
    if (pivots > max_pivots) throw NumericalError("transportation simplex did not terminate");
    compute_duals(basis, cost, u, v);
    // Bland's rule: first improving nonbasic cell in index order.
    std::size_t ei = m, ej = n;
    for (std::size_t r = 0; r < m && ei == m; ++r) {
      for (std::size_t s = 0; s < n; ++s) {
        if (basis.in[r][s]) continue;
        const double rc = cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) - u[r] - v[s];
        if (rc < -tol) {
          ei = r;
          ej = s;
          break;
        }
      }
    }
    if (ei == m) break;
    // Cycle: entering cell (ei, ej) then the tree path column ej -> row ei.
    const std::vector<std::size_t> path = tree_path(basis, m + ej, ei);
    // Cells along the path alternate between "-" and "+", starting with "-".
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t p = 0; p + 1 < path.size(); ++p) {
      const std::size_t x = path[p], y = path[p + 1];
      cells.emplace_back(x < m ? x : y, (x < m ? y : x) - m);
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = cells.size();
    for (std::size_t p = 0; p < cells.size(); p += 2) {
      const double flow = basis.x(static_cast<Eigen::Index>(cells[p].first),
                                  static_cast<Eigen::Index>(cells[p].second));
      const bool better = flow < theta ||
          (flow == theta && cells[p] < cells[leave]);
      if (better) {
        theta = flow;
        leave = p;
      }
    }
    for (std::size_t p = 0; p < cells.size(); ++p) {
      auto& x = basis.x(static_cast<Eigen::Index>(cells[p].first),
                        static_cast<Eigen::Index>(cells[p].second));
      x += (p % 2 == 0) ? -theta : theta;
    }
    basis.x(static_cast<Eigen::Index>(ei), static_cast<Eigen::Index>(ej)) = theta;
    basis.in[ei][ej] = 1;
    basis.in[cells[leave].first][cells[leave].second] = 0;
    basis.x(static_cast<Eigen::Index>(cells[leave].first),
            static_cast<Eigen::Index>(cells[leave].second)) = 0.0;
  }

  ExactOtResult r;
  r.plan = basis.x.cwiseMax(0.0);
  r.w2sq = (r.plan.array() * cost.array()).sum();
  r.min_reduced_cost = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      r.min_reduced_cost = std::min(
          r.min_reduced_cost, cost(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) - u[s] - v[t]);
    }
  }
  r.u = std::move(u);
  r.v = std::move(v);
  return r;
}

}  // namespace syncot
