#pragma once

#include <Eigen/Dense>
#include <vector>

#include "syncot/coupling.hpp"
#include "syncot/grid.hpp"

namespace syncot {

struct DiscreteMeasure {
  std::vector<double> weights;
  double total_mass = 0.0;

  DiscreteMeasure() = default;
  // Throws InputError on negative or non-finite weights.
  explicit DiscreteMeasure(std::vector<double> w);
  std::size_t size() const { return weights.size(); }
};

// Squared Euclidean distances between two point sets (rows are points).
class GroundCost {
 public:
  GroundCost() = default;
  static GroundCost squared_euclidean(const Eigen::MatrixXd& points);
  static GroundCost squared_euclidean(const Eigen::MatrixXd& pa, const Eigen::MatrixXd& pb);
  static GroundCost from_matrix(Eigen::MatrixXd c);

  Eigen::Index rows() const { return c_.rows(); }
  Eigen::Index cols() const { return c_.cols(); }
  const Eigen::MatrixXd& matrix() const { return c_; }
  // Column i holds row i of the cost, so both half-steps read contiguously.
  const Eigen::MatrixXd& transposed() const { return ct_; }
  double max() const { return max_; }

 private:
  Eigen::MatrixXd c_;
  Eigen::MatrixXd ct_;
  double max_ = 0.0;
};

struct PotentialPair {
  std::vector<double> f;
  std::vector<double> g;
  bool centered = false;
};

struct SinkhornParams {
  double epsilon = 0.0;        // absolute; 0 selects epsilon_rel * max(C)
  double epsilon_rel = 1e-3;
  int max_iters = 5000;
  double tol = 1e-9;           // L1 marginal violation, on probability-normalized marginals
  bool epsilon_scaling = true;
  // grad_H / eval_H only: replace each W2^2 term by the Sinkhorn divergence
  // OT(a,b) - OT(a,a)/2 - OT(b,b)/2, which removes the entropic bias.
  bool debias = false;

  double resolve_epsilon(const GroundCost& c) const;
};

void validate(const SinkhornParams& p);

struct SinkhornResult {
  PotentialPair potentials;  // f centered, g shifted by the opposite constant
  double w2sq_reg = 0.0;     // entropic OT value (dual objective), scaled by the mass
  double transport_cost = 0.0;  // <P, C> of the implied plan, scaled by the mass
  double violation = 0.0;
  int iters = 0;
  double epsilon = 0.0;
};

// Scaling iterations on K = exp((f_abs + g_abs - C) / eps). The absorbed
// potentials keep K bounded (log-domain stabilization); u and v are the
// pending diagonal scalings. Kept between calls, it avoids rebuilding K.
struct SinkhornState {
  double epsilon = 0.0;
  Eigen::VectorXd f_abs, g_abs;
  Eigen::MatrixXd kernel;
  Eigen::VectorXd u, v;

  bool empty() const { return kernel.size() == 0; }
};

// Stabilized Sinkhorn for min <P,C> + eps KL(P | a x b) on the normalized
// marginals. A warm start skips epsilon scaling.
SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p,
                            const PotentialPair* warm = nullptr);
// Same, resuming from (and updating) a kernel state.
SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p, SinkhornState& state);
// OT_eps(a, a) through the symmetric fixed point; f == g in the result.
SinkhornResult sinkhorn_self(const DiscreteMeasure& a, const GroundCost& c,
                             const SinkhornParams& p, SinkhornState& state);

struct ExactOtResult {
  Eigen::MatrixXd plan;
  double w2sq = 0.0;
  std::vector<double> u;  // row duals
  std::vector<double> v;  // column duals
  double min_reduced_cost = 0.0;  // >= -tiny certifies optimality
};

// Transportation simplex (north-west corner start, MODI duals, Bland's rule).
ExactOtResult exact_ot_small(const DiscreteMeasure& a, const DiscreteMeasure& b,
                             const GroundCost& c);

struct W2Grad {
  double w2sq = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

W2Grad w2sq_grad(const DiscreteMeasure& a, const DiscreteMeasure& b, const GroundCost& c,
                 const SinkhornParams& p, const PotentialPair* warm = nullptr,
                 PotentialPair* out_potentials = nullptr);

// Warm-start store: Q consecutive slice pairs, and the Q+1 self terms when
// debiasing.
struct SinkhornCache {
  std::vector<SinkhornState> pairs;
  std::vector<SinkhornState> selfs;
  void clear() {
    pairs.clear();
    selfs.clear();
  }
};

struct HGrad {
  double value = 0.0;  // sum_k W2^2(xi_k, xi_{k+1}) / dt (or the divergence)
  Array3 grad;         // (M, N, Q+1), derivative w.r.t. the t-face densities
};

// H and its gradient for rho on t-faces, shape (M, N, Q+1). Slice masses are
// cell masses (density times cell area) pushed through the coupling.
HGrad grad_H(const Array3& rho, const CouplingOperator& pi, const GroundCost& cost,
             const SinkhornParams& p, const GridSpec& g, SinkhornCache* cache = nullptr);
// Value only.
double eval_H(const Array3& rho, const CouplingOperator& pi, const GroundCost& cost,
              const SinkhornParams& p, const GridSpec& g, SinkhornCache* cache = nullptr);

namespace serial {
SinkhornResult sinkhorn_log(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundCost& c, const SinkhornParams& p,
                            const PotentialPair* warm = nullptr);
}  // namespace serial

}  // namespace syncot
