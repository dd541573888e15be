#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/numerics.hpp"

namespace gpmlab {

// Markov kernel of the stationary chain associated with the map: row j holds
// the transition probabilities from cell j, obtained as the time reversal of
// the Lebesgue-transfer matrix under the stationary weights.  Applying the
// matrix to a vector of cell values realizes the Perron-Frobenius operator
// K with respect to nu.
class KernelModel {
 public:
  KernelModel(Grid grid, SparseRowMatrix P, Eigen::VectorXd nu, double z0, double z1);

  const Grid& grid() const { return grid_; }
  const SparseRowMatrix& P() const { return P_; }
  const Eigen::VectorXd& nu() const { return nu_; }
  int cells() const { return static_cast<int>(nu_.size()); }
  double z0() const { return z0_; }
  double z1() const { return z1_; }

  // Largest |row sum - 1| of the reversed matrix before row renormalization.
  double max_renorm_defect() const { return max_renorm_defect_; }
  void set_renorm_defect(double d) { max_renorm_defect_ = d; }

  bool is_low(int i) const { return low_[static_cast<std::size_t>(i)]; }
  bool is_ref0(int i) const { return ref0_[static_cast<std::size_t>(i)]; }
  double nu_low() const { return nu_low_; }
  double nu_high() const { return 1.0 - nu_low_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return P_ * f; }
  void mask_low(Eigen::VectorXd& f) const;
  void mask_high(Eigen::VectorXd& f) const;
  void mask_low(Eigen::MatrixXd& F) const;
  void mask_high(Eigen::MatrixXd& F) const;

  double nu_mean(const Eigen::VectorXd& f) const { return nu_.dot(f); }
  double nu_abs(const Eigen::VectorXd& f) const { return nu_.dot(f.cwiseAbs()); }
  double nu_mean_high(const Eigen::VectorXd& f) const;

  // Centered indicator of [0, boundary(cell_right_index)] as a cell vector.
  Eigen::VectorXd centered_indicator(int cell_right_index) const;

 private:
  Grid grid_;
  SparseRowMatrix P_;
  Eigen::VectorXd nu_;
  double z0_, z1_;
  double max_renorm_defect_ = 0;
  std::vector<char> low_, ref0_;
  double nu_low_ = 0;
};

// K from the Ulam matrix by the similarity K f = L(h f)/h at cell level,
// which reduces to reversing L under nu and renormalizing rows.  The grid
// must carry z0 and z1 as boundaries (make_graded_grid guarantees this).
KernelModel kernel_matrix(const GpmMap& map, const DensityModel& density);

struct IdentityReport {
  int n;
  double max_abs_error;
};

// Trajectory-masked pieces of K^n: with projections onto LOW = [0,z1] and
// HIGH = (z1,1],
//   A_a = (Pi_L P)^a Pi_H          (enter HIGH at time a, LOW before)
//   T_k = Pi_H P^k Pi_H            (HIGH at both ends, free in between)
//   B_b = Pi_H (P Pi_L)^b          (leave HIGH, LOW for the last b steps)
//   C_n = Pi_L (P Pi_L)^n          (never see HIGH)
//   R_k = Pi_H (P Pi_L)^{k-1} P Pi_H   (first return to HIGH after k steps)
// All applications are matrix-free products against column blocks.
class MaskedOperators {
 public:
  MaskedOperators(const KernelModel& kernel, int horizon);

  int horizon() const { return horizon_; }

  Eigen::MatrixXd apply_A(int a, Eigen::MatrixXd F) const;
  Eigen::MatrixXd apply_B(int b, Eigen::MatrixXd F) const;
  Eigen::MatrixXd apply_C(int n, Eigen::MatrixXd F) const;
  Eigen::MatrixXd apply_T(int k, Eigen::MatrixXd F) const;
  Eigen::MatrixXd apply_R(int k, Eigen::MatrixXd F) const;

  // max |K^n F - (sum_{a+k+b=n} A_a T_k B_b + C_n) F| per n = 1..n_max.
  std::vector<IdentityReport> check_decomposition(const Eigen::MatrixXd& F, int n_max) const;

  // max |T_n F - sum_{k=1}^n R_k T_{n-k} F| per n = 1..n_max.
  std::vector<IdentityReport> check_renewal(const Eigen::MatrixXd& F, int n_max) const;

 private:
  const KernelModel& k_;
  int horizon_;
  void check_n(int n) const;
};

struct EnReport {
  std::vector<double> var;  // total variation of E_n f, n = 1..n_max
  LogLogFit fit;            // log-log fit over the last two dyadic decades
};

// E_n f = T_n f - (integral of f over HIGH) 1_HIGH, the remainder after
// projecting T_n onto its leading rank-one part.
EnReport en_remainder(const KernelModel& kernel, const Eigen::VectorXd& f, int n_max);

struct VariationBoundResult {
  std::vector<double> ratios;  // Var(K^n f)/Var(f), n = 1..n_max
  double max_ratio = 0;
  bool trending_up = false;
};

VariationBoundResult variation_bound_check(const KernelModel& kernel, const Eigen::VectorXd& f,
                                           int n_max);

struct CorrelationResult {
  std::vector<double> values;  // nu(phi . K^n f0), n = 1..n_max
  LogLogFit fit;               // fit of |values| over the last two dyadic decades
};

CorrelationResult correlation_sequence(const KernelModel& kernel, const Eigen::VectorXd& phi,
                                       const Eigen::VectorXd& f, int n_max);

struct AlphaOptions {
  int n_max = 128;
  int thresholds = 64;         // order-1 threshold grid (nu-quantile boundaries)
  int thresholds_order2 = 16;  // reduced grid for the order-2 sup
  std::vector<int> gaps = {0, 1, 2, 4, 8, 16};
};

struct AlphaSequence {
  int order = 1;
  std::vector<double> values;  // suffix maxima, index n = 0..n_max
  std::vector<double> raw;     // per-n values before enforcing monotonicity
  LogLogFit fit;

  int n_max() const { return static_cast<int>(values.size()) - 1; }
  bool extension_used(int n) const { return n > n_max(); }
  // Measured value for n <= n_max, fitted power-law extension beyond.
  double value(int n) const;
};

// Dependence coefficients of the stationary chain, realized as the sup over
// centered threshold indicators (order 1), together with products carrying
// one interior application of K^m over a gap grid (order 2).  The whole
// expression is centered once before the outer K^n; constants stay centered
// under K, so no further centering is needed along the iteration.
AlphaSequence alpha_estimate(const KernelModel& kernel, int order, const AlphaOptions& opts = {});

}  // namespace gpmlab
