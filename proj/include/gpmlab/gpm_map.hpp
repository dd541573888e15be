#pragma once

#include <string>
#include <utility>
#include <vector>

namespace gpmlab {

// One monotone branch of an interval map, chosen from a small closed family so
// that values, derivatives and inverses are all available analytically or by a
// guarded Newton iteration.
//
//   lsv_neutral : T(x) = c0 + x + c1 * x^(1+expo)   (c1 > 0, expo in (0,1])
//   affine      : T(x) = c0 + c1 * x
//   power       : T(x) = c0 + c1 * (x - x_ref)^expo (expo > 0)
struct BranchSpec {
  enum class Kind { lsv_neutral, affine, power };
  Kind kind = Kind::affine;
  double c0 = 0;
  double c1 = 1;
  double expo = 1;
};

class GpmMap {
public:
  GpmMap(double gamma, std::vector<double> breakpoints, std::vector<BranchSpec> branches,
         double z0 = -1.0);

  // Presets. lsv: x(1 + 2^g x^g) on [0,1/2], 2x-1 on (1/2,1].
  //          pm: x + x^(1+g) mod 1.  doubling: 2x mod 1 (no neutral branch;
  //          used as an exactly solvable reference map).
  static GpmMap lsv(double gamma);
  static GpmMap pm(double gamma);
  static GpmMap doubling();

  double gamma() const { return gamma_; }
  double z0() const { return z0_; }
  // True when the first branch is neutral at 0, so the invariant density
  // carries an x^(-gamma) singularity there; uniformly expanding presets
  // such as the doubling map have a bounded density instead.
  bool neutral_origin() const { return branches_.front().kind == BranchSpec::Kind::lsv_neutral; }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  double breakpoint(int i) const { return breakpoints_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double apply(double x) const;
  int branch_of(double x) const;

  double branch_value(int k, double x) const;
  double branch_deriv(int k, double x) const;
  double branch_second_deriv(int k, double x) const;
  std::pair<double, double> branch_domain(int k) const;
  std::pair<double, double> branch_image(int k) const;  // closure, sorted
  bool branch_increasing(int k) const;

  // v_k(x): the inverse of branch k at x, solved to near machine precision.
  double inverse_branch(int k, double x) const;
  // |v_k'(x)| given v = v_k(x) already computed.
  double inverse_deriv_at(int k, double v) const;
  double inverse_branch_deriv(int k, double x) const;

  // Branches whose closed image contains x.
  std::vector<int> branches_through(double x) const;
  // M: indices m >= 1 whose closed image contains 0.
  std::vector<int> member_set() const;

private:
  double gamma_;
  std::vector<double> breakpoints_;
  std::vector<BranchSpec> branches_;
  double z0_;
  void check_index(int k) const;
};

// z_0 > z_1 > ... with z_n = v_0(z_{n-1}); J_n = (z_{n+1}, z_n].
struct ZSequence {
  std::vector<double> values;
  double width(std::size_t n) const { return values.at(n) - values.at(n + 1); }
};

// z0 < 0 means "use the map's configured z0".
ZSequence z_sequence(const GpmMap& map, int n, double z0 = -1.0);

// z_n / z_{2n}; tends to 2^{1/gamma}.
double z_ratio_diagnostic(const ZSequence& z, std::size_t n);

struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  const CheckResult& find(const std::string& name) const;
};

// Numerical audit of the defining conditions: uniform expansion away from 0,
// the neutral fixed point with T''(x) ~ c x^(gamma-1), monotonicity of v_0',
// non-empty member set and admissibility of z0. Transitivity is assumed.
ValidationReport validate_gpm(const GpmMap& map, int grid_points = 256);

}  // namespace gpmlab
