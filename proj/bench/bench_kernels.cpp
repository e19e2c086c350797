// Serial reference kernels against their OpenMP counterparts. Sizes are the
// spatial resolution M = N, with Q = M / 2.

#include <benchmark/benchmark.h>

#include <random>

#include "syncot/discrete_ot.hpp"
#include "syncot/grid.hpp"
#include "syncot/proxops.hpp"

using namespace syncot;

namespace {

void fill(Array3& a, std::mt19937_64& eng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : a.values()) v = u(eng);
}

GridSpec grid_for(const benchmark::State& s) {
  const auto m = static_cast<std::size_t>(s.range(0));
  return GridSpec::make_2d(m, m, m / 2);
}

StaggeredField staggered(const GridSpec& g) {
  std::mt19937_64 eng(1);
  StaggeredField u = StaggeredField::zeros(g);
  fill(u.m, eng);
  fill(u.n, eng);
  fill(u.rho, eng, 0.1, 2.0);
  return u;
}

CenteredField centered(const GridSpec& g) {
  std::mt19937_64 eng(2);
  CenteredField v = CenteredField::zeros(g);
  fill(v.m, eng);
  fill(v.n, eng);
  fill(v.rho, eng, -0.5, 2.0);
  return v;
}

template <bool Serial>
void BM_interpolate(benchmark::State& s) {
  const GridSpec g = grid_for(s);
  const StaggeredField u = staggered(g);
  for (auto _ : s) {
    benchmark::DoNotOptimize(Serial ? serial::interpolate(u, g) : interpolate(u, g));
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(g.cells()));
}

template <bool Serial>
void BM_interpolate_adjoint(benchmark::State& s) {
  const GridSpec g = grid_for(s);
  const CenteredField v = centered(g);
  for (auto _ : s) {
    benchmark::DoNotOptimize(Serial ? serial::interpolate_adjoint(v, g) : interpolate_adjoint(v, g));
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(g.cells()));
}

template <bool Serial>
void BM_divergence(benchmark::State& s) {
  const GridSpec g = grid_for(s);
  const StaggeredField u = staggered(g);
  for (auto _ : s) {
    benchmark::DoNotOptimize(Serial ? serial::divergence(u, g) : divergence(u, g));
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(g.cells()));
}

template <bool Serial>
void BM_prox_J(benchmark::State& s) {
  const GridSpec g = grid_for(s);
  const CenteredField v = centered(g);
  const MetricField a = MetricField::scaled_identity(g, {0.7, 0.3});
  ProxParams p;
  p.tau = 0.5;
  for (auto _ : s) {
    benchmark::DoNotOptimize(Serial ? serial::prox_J(v, a, p) : prox_J(v, a, p));
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(g.cells()));
}

template <bool Serial>
void BM_sinkhorn(benchmark::State& s) {
  const auto m = static_cast<std::size_t>(s.range(0));
  const GridSpec g = GridSpec::make_2d(m, m, 2);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(m * m), 2);
  std::vector<double> a(m * m), b(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto r = static_cast<Eigen::Index>(i * m + j);
      pts.row(r) << g.x_center(i), g.y_center(j);
      const double dx = g.x_center(i) - 0.3, dy = g.y_center(j) - 0.5;
      const double ex = g.x_center(i) - 0.7;
      a[i * m + j] = 0.01 + std::exp(-(dx * dx + dy * dy) / 0.02);
      b[i * m + j] = 0.01 + std::exp(-(ex * ex + dy * dy) / 0.02);
    }
  }
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] /= sa;
    b[i] /= sb;
  }
  const GroundCost c = GroundCost::squared_euclidean(pts);
  SinkhornParams p;
  p.epsilon_rel = 1e-2;
  p.tol = 1e-6;
  const DiscreteMeasure da(a), db(b);
  for (auto _ : s) {
    benchmark::DoNotOptimize(Serial ? serial::sinkhorn_log(da, db, c, p) : sinkhorn_log(da, db, c, p));
  }
}

}  // namespace

BENCHMARK(BM_interpolate<true>)->Name("interpolate/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_interpolate<false>)->Name("interpolate/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_interpolate_adjoint<true>)->Name("interpolate_adjoint/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_interpolate_adjoint<false>)->Name("interpolate_adjoint/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_divergence<true>)->Name("divergence/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_divergence<false>)->Name("divergence/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_prox_J<true>)->Name("prox_J/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_prox_J<false>)->Name("prox_J/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_sinkhorn<true>)->Name("sinkhorn/serial")->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sinkhorn<false>)->Name("sinkhorn/fast")->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
