#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/numerics.hpp"

namespace gpmlab {

// Analytic tail function H (nonincreasing, right-continuous, H -> 0) together
// with its cadlag inverse Q.  Restricting to three parametric families keeps
// finiteness of the moment integrals decidable by exponent algebra, which the
// condition checks and series bounds rely on.
class TailSpec {
 public:
  enum class Family { power, power_log, cutoff };

  // H(x) = min(1, (x/x0)^{-q});  Q(u) = x0 u^{-1/q}.
  static TailSpec power(double x0, double q);
  // H(x) = (x/x0)^{-q} (ln(e x/x0))^{-b} for x >= x0, 1 below; Q by inversion.
  static TailSpec power_log(double x0, double q, double b);
  // H(x) = level on [0, bound), 0 beyond;  Q(u) = bound for u < level.
  static TailSpec cutoff(double level, double bound);

  Family family() const { return family_; }
  double x0() const { return x0_; }
  double q() const { return q_; }
  double b() const { return b_; }
  double level() const { return level_; }
  double bound() const { return bound_; }

  double H(double x) const;
  double Q(double u) const;

  // integral of Q^m over (0, a]; +inf when the exponent algebra says so.
  double integral_Q_pow(double m, double a = 1.0) const;
  bool Q_pow_integrable(double m) const;

  // integral of x H(x) dx finite (admissibility in the sense of tail specs).
  bool xH_integrable() const;

  std::string describe() const;

 private:
  TailSpec() = default;
  Family family_ = Family::power;
  double x0_ = 1, q_ = 1, b_ = 0, level_ = 1, bound_ = 1;
  std::vector<double> cache_u_, cache_x_;  // bracket seeds for power_log inversion
};

struct ConditionResult {
  std::string which;
  bool holds = false;
  double value = 0;  // integral value (lil, rate) or best constant (rate_weak)
};

// Moment conditions gating the limit theorems, decided by exponent algebra on
// the descriptor and evaluated by quadrature when finite:
//   lil:       integral of x H(x)^{(1-2g)/(1-g)} dx            (p = 2)
//   rate:      integral of x^{p-1} H(x)^{(1-pg)/(1-g)} dx
//   rate_weak: best C with H(x)^{(1-pg)/(1-g)} <= C x^{-p}
ConditionResult check_condition(const TailSpec& tail, double gamma, double p,
                                const std::string& which);

struct ChangeOfVariablesResult {
  double lhs = 0, rhs = 0, rel_gap = 0;
};

// lhs = integral_0^1 u^{-g(p-1)/(1-g)} Q^p(u) du equals
// rhs = (1-g)/(1-gp) * p * integral_0^inf x^{p-1} H(x)^{(1-pg)/(1-g)} dx,
// by substituting v = u^{(1-gp)/(1-g)}.
ChangeOfVariablesResult change_of_variables_identity(const TailSpec& tail, double gamma, double p);

// One monotone piece: a formula from a fixed family, supported on an open
// interval and null elsewhere.
struct Piece {
  enum class Form { inv_left, inv_right, inv_center, log_center, affine, indicator };
  Form form = Form::indicator;
  double weight = 1;
  double lo = 0, hi = 1;
  double a = 0;  // exponent for inv_* forms, slope for affine
  double c = 0;  // center for *_center forms, intercept for affine

  // Raw formula value, zero outside (lo, hi); the combination weight is
  // applied by ObservableSpec.
  double eval(double x) const;
};

// Weighted combination of monotone pieces.  Weights are stored raw together
// with a scale = max(1, sum |weights|), and every evaluation uses the
// normalized weights, so the combination always satisfies sum |a_l| <= 1.
class ObservableSpec {
 public:
  explicit ObservableSpec(std::vector<Piece> pieces);

  const std::vector<Piece>& pieces() const { return pieces_; }
  double scale() const { return scale_; }
  double norm_weight(std::size_t l) const { return pieces_[l].weight / scale_; }
  double eval(double x) const;
  bool disjoint_supports() const { return disjoint_; }

  static ObservableSpec power_singularity(double a, double weight = 1.0);
  static ObservableSpec indicator(double lo, double hi, double weight = 1.0);

 private:
  std::vector<Piece> pieces_;
  double scale_ = 1;
  bool disjoint_ = true;
};

// Cell values f(center_i) for kernel-side computations.
Eigen::VectorXd to_grid_function(const ObservableSpec& obs, const Grid& grid);

// integral of f against the normalized density interpolant, by closed
// segmentation at interpolation nodes and singularity-aware quadrature.
// Throws std::domain_error when a singular piece is not nu-integrable.
double nu_mean(const ObservableSpec& obs, const DensityModel& density);

// nu(|f| > t) with sub-cell resolution: each monotone piece is inverted in
// closed form and the resulting sets measured through nu_interval.  Requires
// disjoint piece supports.
double nu_tail(const ObservableSpec& obs, const DensityModel& density, double t);

// Smallest t with nu(|f| > t) <= u.
double empirical_quantile(const ObservableSpec& obs, const DensityModel& density, double u);

struct EmpiricalTail {
  std::vector<double> t;
  std::vector<double> H;
  LogLogFit fit;  // fitted tail exponent over the positive entries
};

EmpiricalTail tail_of_observable(const ObservableSpec& obs, const DensityModel& density,
                                 const std::vector<double>& t_grid);

struct MembershipReport {
  bool holds_H = false, holds_Q = false;
  double worst_H = 0, worst_Q = 0;  // worst ratio over the probe grid
};

// Checks nu(|f| > t) <= H(t) along a probe grid, and the equivalent quantile
// comparison Q_{|f|}(u) <= Q(u); the two verdicts must agree.
MembershipReport check_membership(const ObservableSpec& obs, const DensityModel& density,
                                  const TailSpec& tail, int probe_points = 64);

}  // namespace gpmlab
