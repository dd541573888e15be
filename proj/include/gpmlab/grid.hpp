#pragma once

#include <Eigen/Core>

#include <vector>

#include "gpmlab/gpm_map.hpp"

namespace gpmlab {

// Partition of [0,1] into cells [t_i, t_{i+1}), i = 0..cells()-1, with the
// last cell closed on the right.  Cell values are stored separately as plain
// Eigen vectors indexed by cell.
class Grid {
 public:
  explicit Grid(std::vector<double> boundaries);

  int cells() const { return static_cast<int>(boundaries_.size()) - 1; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  double left(int i) const { return boundaries_[static_cast<std::size_t>(i)]; }
  double right(int i) const { return boundaries_[static_cast<std::size_t>(i) + 1]; }
  double width(int i) const { return right(i) - left(i); }
  double center(int i) const { return 0.5 * (left(i) + right(i)); }

  // Index of the cell containing x in [0,1].
  int locate(double x) const;

  // True when x coincides with one of the stored boundaries up to a relative
  // tolerance.
  bool has_boundary(double x, double rel_tol = 1e-9) const;

 private:
  std::vector<double> boundaries_;
};

// Boundaries t_i = (i/n)^grading, i = 0..n.  grading = 1 gives the uniform
// partition; grading > 1 concentrates cells near the neutral fixed point.
std::vector<double> graded_boundaries(int n, double grading);

Grid uniform_grid(int n);

// Graded grid adapted to a map: t_i = (i/n)^grading with the branch
// breakpoints, z0 and z1 = v0(z0) inserted as extra boundaries.  grading < 0
// selects the default 1/gamma.
Grid make_graded_grid(const GpmMap& map, int n, double grading = -1.0);

// Total variation of the piecewise-constant extension of cell values to
// [0,1], counting the jumps at both endpoints (BV functions are compared
// against zero outside the interval).
double variation_norm(const Eigen::VectorXd& cell_values);

}  // namespace gpmlab
