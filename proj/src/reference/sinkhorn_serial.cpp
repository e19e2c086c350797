// Serial Sinkhorn half steps with scalar std::exp, element by element.
#include <cmath>
#include <limits>

#include "../sinkhorn_driver.hpp"

namespace syncot::serial {

namespace {

class ScalarKernel {
 public:
  ScalarKernel(const detail::NormalizedPair& np, const GroundCost& c) : np_(np), c_(c.matrix()) {}

  void update_g(const std::vector<double>& f, std::vector<double>& g, double eps) const {
    for (Eigen::Index j = 0; j < c_.cols(); ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < c_.rows(); ++i) mx = std::max(mx, term_a(f, i, j, eps));
      double s = 0.0;
      for (Eigen::Index i = 0; i < c_.rows(); ++i) s += std::exp(term_a(f, i, j, eps) - mx);
      g[j] = -eps * (mx + std::log(s));
    }
  }

  void update_f(const std::vector<double>& g, std::vector<double>& f, double eps,
                std::vector<double>& viol) const {
    for (Eigen::Index i = 0; i < c_.rows(); ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < c_.cols(); ++j) mx = std::max(mx, term_b(g, i, j, eps));
      double s = 0.0;
      for (Eigen::Index j = 0; j < c_.cols(); ++j) s += std::exp(term_b(g, i, j, eps) - mx);
      const double next = -eps * (mx + std::log(s));
      viol[i] = np_.a[i] * std::abs(std::exp((f[i] - next) / eps) - 1.0);
      f[i] = next;
    }
  }

  double plan_cost(const std::vector<double>& f, const std::vector<double>& g, double eps) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < c_.rows(); ++i) {
      if (np_.a[i] == 0.0) continue;
      for (Eigen::Index j = 0; j < c_.cols(); ++j) {
        if (np_.b[j] == 0.0) continue;
        const double pij = np_.a[i] * np_.b[j] * std::exp((f[i] + g[j] - c_(i, j)) / eps);
        total += pij * c_(i, j);
      }
    }
    return total;
  }

 private:
  double term_a(const std::vector<double>& f, Eigen::Index i, Eigen::Index j, double eps) const {
    return np_.log_a[i] + (f[i] - c_(i, j)) / eps;
  }
  double term_b(const std::vector<double>& g, Eigen::Index i, Eigen::Index j, double eps) const {
    return np_.log_b[j] + (g[j] - c_(i, j)) / eps;
  }

  const detail::NormalizedPair& np_;
  const Eigen::MatrixXd& c_;
};

}  // namespace

SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p,
                            const PotentialPair* warm) {
  const detail::NormalizedPair np = detail::normalize_pair(a, b, c);
  ScalarKernel k(np, c);
  return detail::run_sinkhorn(k, np, c, p, warm, true);
}

}  // namespace syncot::serial
