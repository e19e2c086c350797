#pragma once

#include <Eigen/Dense>
#include <vector>

namespace syncot {

// Linear map from primary cell masses to secondary point masses.
class CouplingOperator {
 public:
  enum class Kind { identity, sparse, dense };

  struct Entry {
    std::size_t row;  // secondary point
    std::size_t col;  // primary cell
    double value;
  };

  CouplingOperator() = default;
  static CouplingOperator identity(Eigen::MatrixXd secondary_points);
  static CouplingOperator sparse(std::size_t n_primary, std::vector<Entry> entries,
                                 Eigen::MatrixXd secondary_points);
  static CouplingOperator dense(Eigen::MatrixXd pi, Eigen::MatrixXd secondary_points);

  Kind kind() const { return kind_; }
  std::size_t n_primary() const { return n_x_; }
  std::size_t n_secondary() const { return static_cast<std::size_t>(points_.rows()); }
  const Eigen::MatrixXd& secondary_points() const { return points_; }

  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> apply_transpose(const std::vector<double>& y) const;

 private:
  void validate() const;

  Kind kind_ = Kind::identity;
  std::size_t n_x_ = 0;
  std::vector<Entry> entries_;
  Eigen::MatrixXd dense_;
  Eigen::MatrixXd points_;
};

}  // namespace syncot
