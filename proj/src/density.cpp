#include "gpmlab/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpmlab {

UlamResult ulam_matrix(const GpmMap& map, const Grid& grid) {
  const int n = grid.cells();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 4);
  std::vector<std::pair<int, double>> row;
  double max_defect = 0;

  for (int i = 0; i < n; ++i) {
    const double a = grid.left(i), b = grid.right(i);
    row.clear();
    for (int k = 0; k < map.branch_count(); ++k) {
      const auto [dlo, dhi] = map.branch_domain(k);
      const double lo = std::max(a, dlo), hi = std::min(b, dhi);
      if (hi <= lo) continue;
      const double u = map.branch_value(k, lo), w = map.branch_value(k, hi);
      const double img_lo = std::max(0.0, std::min(u, w));
      const double img_hi = std::min(1.0, std::max(u, w));
      if (img_hi <= img_lo) continue;
      const int j0 = grid.locate(img_lo), j1 = grid.locate(img_hi);
      for (int j = j0; j <= j1; ++j) {
        const double s_lo = std::max(img_lo, grid.left(j));
        const double s_hi = std::min(img_hi, grid.right(j));
        if (s_hi <= s_lo) continue;
        const double len = std::abs(map.inverse_branch(k, s_hi) - map.inverse_branch(k, s_lo));
        if (len > 0) row.emplace_back(j, len);
      }
    }
    double sum = 0;
    for (const auto& [j, len] : row) sum += len;
    if (!(sum > 0)) throw std::runtime_error("ulam_matrix: empty row, map does not cover cell");
    max_defect = std::max(max_defect, std::abs(sum / (b - a) - 1.0));
    for (const auto& [j, len] : row) trips.emplace_back(i, j, len / sum);
  }

  UlamResult out;
  out.L.resize(n, n);
  out.L.setFromTriplets(trips.begin(), trips.end());
  out.L.makeCompressed();
  out.max_row_defect = max_defect;
  return out;
}

PowerIterationResult stationary_left_vector(const SparseRowMatrix& L,
                                            const Eigen::VectorXd& warm_start,
                                            const PowerIterationOptions& opts) {
  if (L.rows() != L.cols()) throw std::invalid_argument("stationary_left_vector: square matrix required");
  if (warm_start.size() != L.rows())
    throw std::invalid_argument("stationary_left_vector: warm start size mismatch");

  const Eigen::SparseMatrix<double> Lt = L.transpose();
  PowerIterationResult res;
  Eigen::VectorXd nu = warm_start.cwiseMax(0.0);
  const double s0 = nu.sum();
  if (!(s0 > 0)) throw std::invalid_argument("stationary_left_vector: warm start must have mass");
  nu /= s0;

  Eigen::VectorXd next(nu.size());
  for (int it = 1; it <= opts.max_iterations; ++it) {
    next.noalias() = Lt * nu;
    double rel = 0;
    for (Eigen::Index j = 0; j < nu.size(); ++j)
      if (nu[j] > 0) rel = std::max(rel, std::abs(next[j] / nu[j] - 1.0));
    const double abs_res = (next - nu).lpNorm<1>();
    next /= next.sum();
    nu.swap(next);
    res.iterations = it;
    res.abs_residual = abs_res;
    res.rel_residual = rel;
    if (abs_res <= opts.abs_tol && rel <= opts.rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.nu = std::move(nu);
  return res;
}

DensityModel::DensityModel(const GpmMap& map, Grid grid, Eigen::VectorXd nu)
    : grid_(std::move(grid)),
      nu_(std::move(nu)),
      gamma_(map.neutral_origin() ? map.gamma() : 0.0) {
  const int n = grid_.cells();
  if (nu_.size() != n) throw std::invalid_argument("DensityModel: nu size mismatch");
  h_.resize(n);
  nodes_.resize(static_cast<std::size_t>(n));
  cum_.resize(static_cast<std::size_t>(n) + 1);
  cum_[0] = 0;
  for (int i = 0; i < n; ++i) {
    if (!(nu_[i] > 0)) throw std::invalid_argument("DensityModel: cell masses must be positive");
    h_[i] = nu_[i] / grid_.width(i);
    nodes_[static_cast<std::size_t>(i)] = grid_.center(i);
    cum_[static_cast<std::size_t>(i) + 1] = cum_[static_cast<std::size_t>(i)] + nu_[i];
  }
  cum_.back() = 1.0;

  raw_mass_ = h_[0] * nodes_[0] / (1.0 - gamma_);
  for (int i = 0; i + 1 < n; ++i)
    raw_mass_ += 0.5 * (h_[i] + h_[i + 1]) * (nodes_[static_cast<std::size_t>(i) + 1] - nodes_[static_cast<std::size_t>(i)]);
  raw_mass_ += h_[n - 1] * (1.0 - nodes_.back());
}

double DensityModel::nu_interval(double a, double b) const {
  if (b <= a) return 0.0;
  a = std::max(0.0, a);
  b = std::min(1.0, b);
  if (b <= a) return 0.0;
  double out = 0;
  for (int i = grid_.locate(a); i < grid_.cells(); ++i) {
    if (grid_.left(i) >= b) break;
    const double olap = std::min(b, grid_.right(i)) - std::max(a, grid_.left(i));
    if (olap > 0) out += nu_[i] * olap / grid_.width(i);
  }
  return out;
}

double DensityModel::interp_h(double x) const {
  if (x < 0.0 || x > 1.0) throw std::domain_error("DensityModel::interp_h: x outside [0,1]");
  double v;
  if (x < nodes_.front()) {
    v = (x > 0 || gamma_ == 0.0) ? h_[0] * std::pow(x / nodes_.front(), -gamma_)
                                 : std::numeric_limits<double>::infinity();
  } else if (x >= nodes_.back()) {
    v = h_[grid_.cells() - 1];
  } else {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    const double t = (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
    v = (1.0 - t) * h_[static_cast<Eigen::Index>(i)] + t * h_[static_cast<Eigen::Index>(i) + 1];
  }
  return v / raw_mass_;
}

double DensityModel::splice_coeff() const {
  return h_[0] * std::pow(nodes_.front(), gamma_) / raw_mass_;
}

DensityModel invariant_density(const GpmMap& map, const Grid& grid,
                               const PowerIterationOptions& opts) {
  const UlamResult ul = ulam_matrix(map, grid);
  const double g = map.neutral_origin() ? map.gamma() : 0.0;
  Eigen::VectorXd warm(grid.cells());
  for (int i = 0; i < grid.cells(); ++i)
    warm[i] = std::pow(grid.right(i), 1.0 - g) - std::pow(grid.left(i), 1.0 - g);
  const PowerIterationResult pi = stationary_left_vector(ul.L, warm, opts);
  if (!pi.converged) {
    std::ostringstream os;
    os << "invariant_density: power iteration did not converge in " << pi.iterations
       << " iterations (abs residual " << pi.abs_residual << ", rel residual " << pi.rel_residual
       << ")";
    throw std::runtime_error(os.str());
  }
  return DensityModel(map, grid, pi.nu);
}

namespace {

double series_term(const GpmMap& map, const DensityModel& ref, double u, double dprod) {
  double term = 0;
  for (int m : map.member_set())
    term += map.inverse_branch_deriv(m, u) * dprod *
            ref.interp_h(map.inverse_branch(m, u));
  return term;
}

}  // namespace

double density_series_eval(const GpmMap& map, const DensityModel& ref, int n_terms, double x) {
  if (n_terms < 1) throw std::invalid_argument("density_series_eval: n_terms must be >= 1");
  double u = x, dprod = 1.0, total = 0;
  for (int n = 0; n < n_terms; ++n) {
    total += series_term(map, ref, u, dprod);
    dprod *= map.inverse_branch_deriv(0, u);
    u = map.inverse_branch(0, u);
  }
  return total;
}

SeriesExtension density_series_extension(const GpmMap& map, const DensityModel& ref, int n_terms) {
  if (n_terms < 2) throw std::invalid_argument("density_series_extension: n_terms must be >= 2");
  const double z1 = map.inverse_branch(0, map.z0());
  SeriesExtension out;
  out.terms = n_terms;
  const Grid& grid = ref.grid();
  const int n_half = std::max(1, (n_terms - 1) / 2);
  for (int i = 0; i < grid.cells() && grid.right(i) <= z1 * (1.0 + 1e-12); ++i) {
    const double x = grid.center(i);
    double u = x, dprod = 1.0, total = 0, t_half = 0, t_last = 0;
    for (int n = 0; n < n_terms; ++n) {
      t_last = series_term(map, ref, u, dprod);
      if (n == n_half) t_half = t_last;
      total += t_last;
      dprod *= map.inverse_branch_deriv(0, u);
      u = map.inverse_branch(0, u);
    }
    out.x.push_back(x);
    out.value.push_back(total);
    // Terms decay like n^{-(1+1/gamma)}.  Individual terms wobble with the
    // interpolant, so the power-law exponent is fitted across the second half
    // of the run rather than from one consecutive pair.
    double rel = 0;
    if (t_half > 0 && t_last > 0 && t_last < t_half && n_half < n_terms - 1) {
      const double p = std::log(t_last / t_half) /
                       std::log(static_cast<double>(n_terms - 1) / n_half);
      const double tail = (p < -1.0)
                              ? t_last * (n_terms - 1) / (-p - 1.0)
                              : std::numeric_limits<double>::infinity();
      rel = tail / total;
    } else if (t_last > 0) {
      rel = std::numeric_limits<double>::infinity();
    }
    out.tail_rel.push_back(rel);
    out.tail_rel_bound = std::max(out.tail_rel_bound, rel);
  }
  return out;
}

}  // namespace gpmlab
