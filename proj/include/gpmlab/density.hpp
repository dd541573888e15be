#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

#include "gpmlab/grid.hpp"
#include "gpmlab/gpm_map.hpp"

namespace gpmlab {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct UlamResult {
  SparseRowMatrix L;      // row-stochastic transition matrix of cell masses
  double max_row_defect;  // largest |row sum - 1| before row renormalization
};

// L[i][j] = lambda(cell_i intersect T^{-1} cell_j) / lambda(cell_i), assembled
// branch by branch from inverse images of cell boundaries.  Rows are
// renormalized to sum exactly to 1; the pre-normalization defect is reported.
UlamResult ulam_matrix(const GpmMap& map, const Grid& grid);

struct PowerIterationOptions {
  int max_iterations = 100000;
  double abs_tol = 1e-10;  // L1 distance between successive iterates
  double rel_tol = 1e-9;   // max_j |(nu L)_j / nu_j - 1| over cells with mass
};

struct PowerIterationResult {
  Eigen::VectorXd nu;
  int iterations = 0;
  double abs_residual = 0;
  double rel_residual = 0;
  bool converged = false;
};

// Left fixed vector of a row-stochastic matrix by power iteration, normalized
// to a probability vector.  The relative residual criterion matters for the
// graded grids used here: cells near 0 carry masses many orders of magnitude
// apart, and an absolute L1 test alone would leave their entries unconverged.
PowerIterationResult stationary_left_vector(const SparseRowMatrix& L,
                                            const Eigen::VectorXd& warm_start,
                                            const PowerIterationOptions& opts = {});

// Invariant density on a grid: per-cell masses nu, cell-average densities
// h = nu/width, and a continuous interpolant used wherever pointwise values
// of h are needed (chain weights, closed-form integrals of observables).
//
// The interpolant is piecewise linear through cell centers, constant right of
// the last center, and proportional to x^{-gamma} left of the first center;
// it is normalized so its total integral is exactly 1.  gamma() is the
// exponent of that left tail: the map's gamma when the origin is neutral,
// and 0 (a flat extension) for uniformly expanding maps whose density is
// bounded.
class DensityModel {
 public:
  DensityModel(const GpmMap& map, Grid grid, Eigen::VectorXd nu);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& nu() const { return nu_; }
  const Eigen::VectorXd& h() const { return h_; }
  double gamma() const { return gamma_; }

  double mass(int i) const { return nu_[i]; }
  double density(int i) const { return h_[i]; }

  // nu-measure of [a,b] under the piecewise-constant cell masses.
  double nu_interval(double a, double b) const;

  // Prefix sums of nu (size cells()+1), for inverse-CDF sampling.
  const std::vector<double>& cumulative() const { return cum_; }

  // Normalized interpolant.
  double interp_h(double x) const;
  const std::vector<double>& interp_nodes() const { return nodes_; }
  double interp_value(int i) const { return h_[i] / raw_mass_; }
  double splice_coeff() const;  // interp_h(x) = coeff * x^{-gamma} below nodes()[0]
  double interp_raw_mass() const { return raw_mass_; }

 private:
  Grid grid_;
  Eigen::VectorXd nu_, h_;
  double gamma_;
  std::vector<double> nodes_, cum_;
  double raw_mass_;
};

// Ulam pipeline: assemble L, power-iterate from an x^{-gamma} warm start,
// wrap the fixed vector.  Throws std::runtime_error when the iteration fails
// to converge, with both residuals in the message.
DensityModel invariant_density(const GpmMap& map, const Grid& grid,
                               const PowerIterationOptions& opts = {});

struct SeriesExtension {
  std::vector<double> x;         // evaluation points: cell centers in [0, z1]
  std::vector<double> value;     // truncated series values
  std::vector<double> tail_rel;  // per-point truncation remainder, relative
  int terms = 0;
  // Max of tail_rel.  Terms at a point x only start their n^{-(1+1/gamma)}
  // decay once n exceeds roughly x^{-gamma}, so with a fixed term budget the
  // deepest cells legitimately report an infinite remainder; consult tail_rel
  // over the x range actually used.
  double tail_rel_bound = 0;
};

// One term feeds the next by pulling back through the neutral branch:
//   h(x) = sum_n sum_{m in M} |(v_m v0^n)'(x)| h(v_m v0^n x),
// with every evaluation of h on the right landing in (z1, 1], where the
// reference model is trusted.  Used as an independent consistency check of
// the Ulam density near 0.
double density_series_eval(const GpmMap& map, const DensityModel& ref, int n_terms, double x);

SeriesExtension density_series_extension(const GpmMap& map, const DensityModel& ref, int n_terms);

}  // namespace gpmlab
