#include "gpmlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gpmlab {

KernelModel::KernelModel(Grid grid, SparseRowMatrix P, Eigen::VectorXd nu, double z0, double z1)
    : grid_(std::move(grid)), P_(std::move(P)), nu_(std::move(nu)), z0_(z0), z1_(z1) {
  const int n = grid_.cells();
  if (P_.rows() != n || P_.cols() != n || nu_.size() != n)
    throw std::invalid_argument("KernelModel: size mismatch between grid, P and nu");
  if (!(z1_ > 0) || !(z1_ < z0_) || !(z0_ < 1))
    throw std::invalid_argument("KernelModel: need 0 < z1 < z0 < 1");
  for (int j = 0; j < n; ++j) {
    const double rs = P_.row(j).sum();
    if (std::abs(rs - 1.0) > 1e-8)
      throw std::invalid_argument("KernelModel: P rows must be stochastic");
    P_.row(j) /= rs;
  }
  low_.resize(static_cast<std::size_t>(n));
  ref0_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    low_[static_cast<std::size_t>(i)] = grid_.right(i) <= z1_ * (1.0 + 1e-12);
    ref0_[static_cast<std::size_t>(i)] =
        grid_.left(i) >= z1_ * (1.0 - 1e-12) && grid_.right(i) <= z0_ * (1.0 + 1e-12);
    if (low_[static_cast<std::size_t>(i)]) nu_low_ += nu_[i];
  }
}

void KernelModel::mask_low(Eigen::VectorXd& f) const {
  for (int i = 0; i < cells(); ++i)
    if (!low_[static_cast<std::size_t>(i)]) f[i] = 0;
}

void KernelModel::mask_high(Eigen::VectorXd& f) const {
  for (int i = 0; i < cells(); ++i)
    if (low_[static_cast<std::size_t>(i)]) f[i] = 0;
}

void KernelModel::mask_low(Eigen::MatrixXd& F) const {
  for (int i = 0; i < cells(); ++i)
    if (!low_[static_cast<std::size_t>(i)]) F.row(i).setZero();
}

void KernelModel::mask_high(Eigen::MatrixXd& F) const {
  for (int i = 0; i < cells(); ++i)
    if (low_[static_cast<std::size_t>(i)]) F.row(i).setZero();
}

double KernelModel::nu_mean_high(const Eigen::VectorXd& f) const {
  double s = 0;
  for (int i = 0; i < cells(); ++i)
    if (!low_[static_cast<std::size_t>(i)]) s += nu_[i] * f[i];
  return s;
}

Eigen::VectorXd KernelModel::centered_indicator(int cell_right_index) const {
  if (cell_right_index < 0 || cell_right_index > cells())
    throw std::invalid_argument("KernelModel::centered_indicator: index out of range");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(cells());
  double mass = 0;
  for (int i = 0; i < cell_right_index; ++i) {
    g[i] = 1.0;
    mass += nu_[i];
  }
  g.array() -= mass;
  return g;
}

KernelModel kernel_matrix(const GpmMap& map, const DensityModel& density) {
  const Grid& grid = density.grid();
  const double z0 = map.z0();
  const double z1 = map.inverse_branch(0, z0);
  if (!grid.has_boundary(z0) || !grid.has_boundary(z1))
    throw std::invalid_argument("kernel_matrix: grid must carry z0 and z1 as boundaries");

  const UlamResult ul = ulam_matrix(map, grid);
  const int n = grid.cells();
  const Eigen::VectorXd& nu = density.nu();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(ul.L.nonZeros()));
  for (int i = 0; i < n; ++i)
    for (SparseRowMatrix::InnerIterator it(ul.L, i); it; ++it)
      trips.emplace_back(static_cast<int>(it.col()), i, nu[i] * it.value() / nu[it.col()]);

  SparseRowMatrix P(n, n);
  P.setFromTriplets(trips.begin(), trips.end());
  P.makeCompressed();

  double defect = 0;
  for (int j = 0; j < n; ++j) {
    const double rs = P.row(j).sum();
    defect = std::max(defect, std::abs(rs - 1.0));
    P.row(j) /= rs;
  }

  KernelModel model(grid, std::move(P), nu, z0, z1);
  model.set_renorm_defect(defect);
  return model;
}

MaskedOperators::MaskedOperators(const KernelModel& kernel, int horizon)
    : k_(kernel), horizon_(horizon) {
  if (horizon_ < 1) throw std::invalid_argument("MaskedOperators: horizon must be >= 1");
}

void MaskedOperators::check_n(int n) const {
  if (n < 0) throw std::invalid_argument("MaskedOperators: negative index");
  if (n > horizon_) {
    std::ostringstream os;
    os << "MaskedOperators: index " << n << " exceeds horizon " << horizon_;
    throw std::length_error(os.str());
  }
}

Eigen::MatrixXd MaskedOperators::apply_A(int a, Eigen::MatrixXd F) const {
  check_n(a);
  k_.mask_high(F);
  for (int i = 0; i < a; ++i) {
    F = k_.P() * F;
    k_.mask_low(F);
  }
  return F;
}

Eigen::MatrixXd MaskedOperators::apply_B(int b, Eigen::MatrixXd F) const {
  check_n(b);
  for (int i = 0; i < b; ++i) {
    k_.mask_low(F);
    F = k_.P() * F;
  }
  k_.mask_high(F);
  return F;
}

Eigen::MatrixXd MaskedOperators::apply_C(int n, Eigen::MatrixXd F) const {
  check_n(n);
  for (int i = 0; i < n; ++i) {
    k_.mask_low(F);
    F = k_.P() * F;
  }
  k_.mask_low(F);
  return F;
}

Eigen::MatrixXd MaskedOperators::apply_T(int k, Eigen::MatrixXd F) const {
  check_n(k);
  k_.mask_high(F);
  for (int i = 0; i < k; ++i) F = k_.P() * F;
  k_.mask_high(F);
  return F;
}

Eigen::MatrixXd MaskedOperators::apply_R(int k, Eigen::MatrixXd F) const {
  check_n(k);
  if (k < 1) throw std::invalid_argument("MaskedOperators::apply_R: k must be >= 1");
  k_.mask_high(F);
  F = k_.P() * F;
  for (int i = 1; i < k; ++i) {
    k_.mask_low(F);
    F = k_.P() * F;
  }
  k_.mask_high(F);
  return F;
}

std::vector<IdentityReport> MaskedOperators::check_decomposition(const Eigen::MatrixXd& F,
                                                                 int n_max) const {
  check_n(n_max);
  if (n_max < 1) throw std::invalid_argument("check_decomposition: n_max must be >= 1");
  const auto un = static_cast<std::size_t>(n_max);

  // U[j] accumulates sum_{k+b=j} T_k B_b F across the b-sweep.
  std::vector<Eigen::MatrixXd> U(un + 1, Eigen::MatrixXd::Zero(F.rows(), F.cols()));
  Eigen::MatrixXd W = F;  // W = (P Pi_L)^b F
  for (int b = 0; b <= n_max; ++b) {
    Eigen::MatrixXd S = W;
    k_.mask_high(S);
    U[static_cast<std::size_t>(b)] += S;
    for (int k = 1; k + b <= n_max; ++k) {
      S = k_.P() * S;
      Eigen::MatrixXd HS = S;
      k_.mask_high(HS);
      U[static_cast<std::size_t>(b + k)] += HS;
    }
    if (b < n_max) {
      k_.mask_low(W);
      W = k_.P() * W;
    }
  }

  // X_n = sum_{a+j=n} (Pi_L P)^a U_j via one running recursion; W2 tracks
  // (P Pi_L)^n F for the C_n term, Kn the unmasked power.
  std::vector<IdentityReport> out;
  Eigen::MatrixXd X = U[0];
  Eigen::MatrixXd W2 = F;
  Eigen::MatrixXd Kn = F;
  for (int n = 1; n <= n_max; ++n) {
    X = k_.P() * X;
    k_.mask_low(X);
    X += U[static_cast<std::size_t>(n)];
    k_.mask_low(W2);
    W2 = k_.P() * W2;
    Eigen::MatrixXd Cn = W2;
    k_.mask_low(Cn);
    Kn = k_.P() * Kn;
    const double err = (Kn - (X + Cn)).cwiseAbs().maxCoeff();
    out.push_back({n, err});
  }
  return out;
}

std::vector<IdentityReport> MaskedOperators::check_renewal(const Eigen::MatrixXd& F,
                                                           int n_max) const {
  check_n(n_max);
  if (n_max < 1) throw std::invalid_argument("check_renewal: n_max must be >= 1");

  std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(n_max) + 1);
  Eigen::MatrixXd raw = F;
  k_.mask_high(raw);
  G[0] = raw;
  for (int j = 1; j <= n_max; ++j) {
    raw = k_.P() * raw;
    G[static_cast<std::size_t>(j)] = raw;
    k_.mask_high(G[static_cast<std::size_t>(j)]);
  }

  // H_n = P(G_{n-1} + Pi_L H_{n-1}) accumulates sum_{k=1}^n (P Pi_L)^{k-1} P G_{n-k}.
  std::vector<IdentityReport> out;
  Eigen::MatrixXd H = k_.P() * G[0];
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      Eigen::MatrixXd tmp = H;
      k_.mask_low(tmp);
      tmp += G[static_cast<std::size_t>(n - 1)];
      H = k_.P() * tmp;
    }
    Eigen::MatrixXd HH = H;
    k_.mask_high(HH);
    const double err = (HH - G[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff();
    out.push_back({n, err});
  }
  return out;
}

EnReport en_remainder(const KernelModel& kernel, const Eigen::VectorXd& f, int n_max) {
  if (n_max < 1) throw std::invalid_argument("en_remainder: n_max must be >= 1");
  Eigen::VectorXd u = f;
  kernel.mask_high(u);
  const double mean_high = kernel.nu_mean_high(f);
  Eigen::VectorXd ones_high = Eigen::VectorXd::Ones(kernel.cells());
  kernel.mask_high(ones_high);

  EnReport rep;
  rep.var.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    u = kernel.P() * u;
    Eigen::VectorXd e = u;
    kernel.mask_high(e);
    e -= mean_high * ones_high;
    rep.var.push_back(variation_norm(e));
  }
  rep.fit = fit_loglog_range(rep.var, static_cast<std::size_t>(std::max(1, n_max / 4)),
                             static_cast<std::size_t>(n_max));
  return rep;
}

VariationBoundResult variation_bound_check(const KernelModel& kernel, const Eigen::VectorXd& f,
                                           int n_max) {
  if (n_max < 1) throw std::invalid_argument("variation_bound_check: n_max must be >= 1");
  const double v0 = variation_norm(f);
  VariationBoundResult res;
  if (v0 == 0) {
    res.ratios.assign(static_cast<std::size_t>(n_max), 0.0);
    return res;
  }
  Eigen::VectorXd u = f;
  for (int n = 1; n <= n_max; ++n) {
    u = kernel.P() * u;
    res.ratios.push_back(variation_norm(u) / v0);
    res.max_ratio = std::max(res.max_ratio, res.ratios.back());
  }
  const LogLogFit tail = fit_loglog_range(res.ratios, static_cast<std::size_t>(std::max(1, n_max / 4)),
                                          static_cast<std::size_t>(n_max));
  res.trending_up = tail.valid && tail.slope > 0.05;
  return res;
}

CorrelationResult correlation_sequence(const KernelModel& kernel, const Eigen::VectorXd& phi,
                                       const Eigen::VectorXd& f, int n_max) {
  if (n_max < 1) throw std::invalid_argument("correlation_sequence: n_max must be >= 1");
  Eigen::VectorXd u = f;
  u.array() -= kernel.nu_mean(f);
  CorrelationResult res;
  std::vector<double> absval;
  for (int n = 1; n <= n_max; ++n) {
    u = kernel.P() * u;
    const double c = kernel.nu_mean(phi.cwiseProduct(u));
    res.values.push_back(c);
    absval.push_back(std::abs(c));
  }
  res.fit = fit_loglog_range(absval, static_cast<std::size_t>(std::max(1, n_max / 4)),
                             static_cast<std::size_t>(n_max));
  return res;
}

double AlphaSequence::value(int n) const {
  if (n < 0) throw std::invalid_argument("AlphaSequence::value: negative n");
  if (n <= n_max()) return values[static_cast<std::size_t>(n)];
  if (!fit.valid) return values.back();
  return std::min(values.back(), fit.eval(static_cast<double>(n)));
}

namespace {

// nu-quantile cell boundaries used as indicator thresholds; always includes
// the boundaries nearest 0.5 and z1.
std::vector<int> threshold_cells(const KernelModel& k, int count) {
  const int n = k.cells();
  std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] + k.nu()[i];
  std::vector<int> cells;
  for (int s = 1; s <= count; ++s) {
    const double q = static_cast<double>(s) / (count + 1);
    const auto it = std::lower_bound(cum.begin(), cum.end(), q);
    int idx = static_cast<int>(it - cum.begin());
    idx = std::max(1, std::min(idx, n - 1));
    cells.push_back(idx);
  }
  for (double special : {0.5, k.z1()}) {
    int best = 1;
    double dist = 2.0;
    for (int b = 1; b < n; ++b) {
      const double d = std::abs(k.grid().left(b) - special);
      if (d < dist) {
        dist = d;
        best = b;
      }
    }
    cells.push_back(best);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

// Per-n sup of nu|K^n phi0| over a family of starting vectors, batched as
// matrix columns.
std::vector<double> iterate_sup(const KernelModel& k, Eigen::MatrixXd Phi, int n_max) {
  std::vector<double> raw(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) Phi = k.P() * Phi;
    double m = 0;
    for (Eigen::Index c = 0; c < Phi.cols(); ++c) m = std::max(m, k.nu_abs(Phi.col(c)));
    raw[static_cast<std::size_t>(n)] = m;
  }
  return raw;
}

}  // namespace

AlphaSequence alpha_estimate(const KernelModel& kernel, int order, const AlphaOptions& opts) {
  if (order != 1 && order != 2) throw std::invalid_argument("alpha_estimate: order must be 1 or 2");
  if (opts.n_max < 4) throw std::invalid_argument("alpha_estimate: n_max too small");

  const std::vector<int> cells1 = threshold_cells(kernel, opts.thresholds);
  Eigen::MatrixXd G1(kernel.cells(), static_cast<Eigen::Index>(cells1.size()));
  for (std::size_t s = 0; s < cells1.size(); ++s) G1.col(static_cast<Eigen::Index>(s)) = kernel.centered_indicator(cells1[s]);
  std::vector<double> raw = iterate_sup(kernel, G1, opts.n_max);

  if (order == 2) {
    const std::vector<int> cells2 = threshold_cells(kernel, opts.thresholds_order2);
    const std::size_t m2 = cells2.size();
    std::vector<Eigen::VectorXd> base(m2);
    for (std::size_t t = 0; t < m2; ++t) base[t] = kernel.centered_indicator(cells2[t]);

    // Inner factors K^m g0 for every gap, advanced incrementally.
    const int max_gap = *std::max_element(opts.gaps.begin(), opts.gaps.end());
    std::vector<std::vector<Eigen::VectorXd>> inner(m2);
    for (std::size_t t = 0; t < m2; ++t) {
      Eigen::VectorXd u = base[t];
      for (int m = 0; m <= max_gap; ++m) {
        if (m > 0) u = kernel.P() * u;
        if (std::find(opts.gaps.begin(), opts.gaps.end(), m) != opts.gaps.end())
          inner[t].push_back(u);
      }
    }

    const std::size_t n_gaps = inner[0].size();
    Eigen::MatrixXd Phi(kernel.cells(), static_cast<Eigen::Index>(m2 * m2 * n_gaps));
    Eigen::Index col = 0;
    for (std::size_t s = 0; s < m2; ++s)
      for (std::size_t t = 0; t < m2; ++t)
        for (std::size_t g = 0; g < n_gaps; ++g) {
          Eigen::VectorXd phi = base[s].cwiseProduct(inner[t][g]);
          phi.array() -= kernel.nu_mean(phi);
          Phi.col(col++) = phi;
        }
    const std::vector<double> raw2 = iterate_sup(kernel, std::move(Phi), opts.n_max);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = std::max(raw[i], raw2[i]);
  }

  AlphaSequence seq;
  seq.order = order;
  seq.raw = raw;
  seq.values = raw;
  for (std::size_t i = seq.values.size(); i-- > 1;)
    seq.values[i - 1] = std::max(seq.values[i - 1], seq.values[i]);

  // Fit on the suffix maxima over the last two dyadic decades; index i of the
  // helper corresponds to n = i here, so shift by one position.
  std::vector<double> shifted(seq.values.begin() + 1, seq.values.end());
  seq.fit = fit_loglog_range(shifted, static_cast<std::size_t>(std::max(1, opts.n_max / 4)),
                             static_cast<std::size_t>(opts.n_max));
  return seq;
}

}  // namespace gpmlab
