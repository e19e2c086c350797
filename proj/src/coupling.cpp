#include "syncot/coupling.hpp"

#include <cmath>

#include "syncot/error.hpp"

namespace syncot {

CouplingOperator CouplingOperator::identity(Eigen::MatrixXd secondary_points) {
  CouplingOperator c;
  c.kind_ = Kind::identity;
  c.n_x_ = static_cast<std::size_t>(secondary_points.rows());
  c.points_ = std::move(secondary_points);
  return c;
}

CouplingOperator CouplingOperator::sparse(std::size_t n_primary, std::vector<Entry> entries,
                                          Eigen::MatrixXd secondary_points) {
  CouplingOperator c;
  c.kind_ = Kind::sparse;
  c.n_x_ = n_primary;
  c.entries_ = std::move(entries);
  c.points_ = std::move(secondary_points);
  c.validate();
  return c;
}

CouplingOperator CouplingOperator::dense(Eigen::MatrixXd pi, Eigen::MatrixXd secondary_points) {
  CouplingOperator c;
  c.kind_ = Kind::dense;
  c.n_x_ = static_cast<std::size_t>(pi.cols());
  if (pi.rows() != secondary_points.rows()) {
    throw ConfigError("coupling matrix rows must match the number of secondary points");
  }
  c.dense_ = std::move(pi);
  c.points_ = std::move(secondary_points);
  c.validate();
  return c;
}

void CouplingOperator::validate() const {
  std::vector<double> col_sum(n_x_, 0.0);
  auto visit = [&](std::size_t row, std::size_t col, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("coupling entries must be nonnegative");
    if (row >= n_secondary() || col >= n_x_) throw ConfigError("coupling entry out of range");
    col_sum[col] += v;
  };
  if (kind_ == Kind::sparse) {
    for (const Entry& e : entries_) visit(e.row, e.col, e.value);
  } else if (kind_ == Kind::dense) {
    for (Eigen::Index j = 0; j < dense_.cols(); ++j) {
      for (Eigen::Index i = 0; i < dense_.rows(); ++i) {
        visit(static_cast<std::size_t>(i), static_cast<std::size_t>(j), dense_(i, j));
      }
    }
  }
  for (double s : col_sum) {
    if (s > 1.0 + 1e-12) throw ConfigError("coupling column sums must not exceed 1");
  }
}

std::vector<double> CouplingOperator::apply(const std::vector<double>& x) const {
  if (x.size() != n_x_) throw ConfigError("coupling input has the wrong length");
  switch (kind_) {
    case Kind::identity:
      return x;
    case Kind::sparse: {
      std::vector<double> y(n_secondary(), 0.0);
      for (const Entry& e : entries_) y[e.row] += e.value * x[e.col];
      return y;
    }
    case Kind::dense: {
      const Eigen::VectorXd y =
          dense_ * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
      return {y.data(), y.data() + y.size()};
    }
  }
  return {};
}

std::vector<double> CouplingOperator::apply_transpose(const std::vector<double>& y) const {
  if (y.size() != n_secondary()) throw ConfigError("coupling adjoint input has the wrong length");
  switch (kind_) {
    case Kind::identity:
      return y;
    case Kind::sparse: {
      std::vector<double> x(n_x_, 0.0);
      for (const Entry& e : entries_) x[e.col] += e.value * y[e.row];
      return x;
    }
    case Kind::dense: {
      const Eigen::VectorXd x = dense_.transpose() *
          Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
      return {x.data(), x.data() + x.size()};
    }
  }
  return {};
}

}  // namespace syncot
