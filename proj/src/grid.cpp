#include "gpmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmlab {

Grid::Grid(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
  if (boundaries_.size() < 2) throw std::invalid_argument("Grid: need at least one cell");
  if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0)
    throw std::invalid_argument("Grid: boundaries must span [0,1]");
  for (std::size_t i = 0; i + 1 < boundaries_.size(); ++i)
    if (!(boundaries_[i] < boundaries_[i + 1]))
      throw std::invalid_argument("Grid: boundaries must be strictly increasing");
}

int Grid::locate(double x) const {
  if (x < 0.0 || x > 1.0) throw std::domain_error("Grid::locate: x outside [0,1]");
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
  int i = static_cast<int>(it - boundaries_.begin()) - 1;
  return std::max(0, std::min(i, cells() - 1));
}

bool Grid::has_boundary(double x, double rel_tol) const {
  auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), x);
  const double tol = rel_tol * std::max(x, 1e-300);
  if (it != boundaries_.end() && std::abs(*it - x) <= tol) return true;
  if (it != boundaries_.begin() && std::abs(*(it - 1) - x) <= tol) return true;
  return false;
}

std::vector<double> graded_boundaries(int n, double grading) {
  if (n < 1) throw std::invalid_argument("graded_boundaries: n must be >= 1");
  if (!(grading >= 1.0)) throw std::invalid_argument("graded_boundaries: grading must be >= 1");
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    t[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / n, grading);
  t.front() = 0.0;
  t.back() = 1.0;
  return t;
}

Grid uniform_grid(int n) { return Grid(graded_boundaries(n, 1.0)); }

Grid make_graded_grid(const GpmMap& map, int n, double grading) {
  const double g = (grading < 0) ? 1.0 / map.gamma() : grading;
  std::vector<double> t = graded_boundaries(n, g);
  for (int k = 1; k < map.branch_count(); ++k) t.push_back(map.breakpoint(k));
  t.push_back(map.z0());
  t.push_back(map.inverse_branch(0, map.z0()));
  std::sort(t.begin(), t.end());
  // Merge near-duplicates with a tolerance relative to the value itself;
  // graded cells near 0 can be far below any absolute scale.
  std::vector<double> merged;
  merged.reserve(t.size());
  merged.push_back(t.front());
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] - merged.back() > 1e-12 * t[i]) merged.push_back(t[i]);
  merged.back() = 1.0;
  return Grid(std::move(merged));
}

double variation_norm(const Eigen::VectorXd& cell_values) {
  const Eigen::Index n = cell_values.size();
  if (n == 0) return 0.0;
  double v = std::abs(cell_values[0]) + std::abs(cell_values[n - 1]);
  for (Eigen::Index i = 0; i + 1 < n; ++i) v += std::abs(cell_values[i + 1] - cell_values[i]);
  return v;
}

}  // namespace gpmlab
