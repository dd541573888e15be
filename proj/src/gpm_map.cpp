#include "gpmlab/gpm_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpmlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double branch_eval(const BranchSpec& b, double x_ref, double x) {
  switch (b.kind) {
    case BranchSpec::Kind::lsv_neutral:
      return b.c0 + x + b.c1 * std::pow(x, 1.0 + b.expo);
    case BranchSpec::Kind::affine:
      return b.c0 + b.c1 * x;
    case BranchSpec::Kind::power:
      return b.c0 + b.c1 * std::pow(x - x_ref, b.expo);
  }
  return 0;
}

double branch_eval_d(const BranchSpec& b, double x_ref, double x) {
  switch (b.kind) {
    case BranchSpec::Kind::lsv_neutral:
      return 1.0 + b.c1 * (1.0 + b.expo) * std::pow(x, b.expo);
    case BranchSpec::Kind::affine:
      return b.c1;
    case BranchSpec::Kind::power:
      return b.c1 * b.expo * std::pow(x - x_ref, b.expo - 1.0);
  }
  return 0;
}

double branch_eval_dd(const BranchSpec& b, double x_ref, double x) {
  switch (b.kind) {
    case BranchSpec::Kind::lsv_neutral:
      return b.c1 * (1.0 + b.expo) * b.expo * std::pow(x, b.expo - 1.0);
    case BranchSpec::Kind::affine:
      return 0.0;
    case BranchSpec::Kind::power:
      return b.c1 * b.expo * (b.expo - 1.0) * std::pow(x - x_ref, b.expo - 2.0);
  }
  return 0;
}

}  // namespace

GpmMap::GpmMap(double gamma, std::vector<double> breakpoints, std::vector<BranchSpec> branches,
               double z0)
    : gamma_(gamma), breakpoints_(std::move(breakpoints)), branches_(std::move(branches)) {
  if (!(gamma_ > 0.0) || !(gamma_ < 1.0))
    throw std::invalid_argument("GpmMap: gamma must lie in (0,1)");
  if (breakpoints_.size() < 3)
    throw std::invalid_argument("GpmMap: need at least two branches");
  if (breakpoints_.size() != branches_.size() + 1)
    throw std::invalid_argument("GpmMap: breakpoints/branches size mismatch");
  if (std::abs(breakpoints_.front()) > 0 || std::abs(breakpoints_.back() - 1.0) > 0)
    throw std::invalid_argument("GpmMap: breakpoints must start at 0 and end at 1");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] < breakpoints_[i + 1]))
      throw std::invalid_argument("GpmMap: breakpoints must be strictly increasing");
  for (const auto& b : branches_) {
    if (b.kind == BranchSpec::Kind::lsv_neutral && !(b.c1 > 0))
      throw std::invalid_argument("GpmMap: lsv_neutral branch needs c1 > 0");
    if (b.kind == BranchSpec::Kind::lsv_neutral && (!(b.expo > 0) || b.expo > 1))
      throw std::invalid_argument("GpmMap: lsv_neutral branch needs expo in (0,1]");
    if (b.kind != BranchSpec::Kind::lsv_neutral && b.c1 == 0)
      throw std::invalid_argument("GpmMap: degenerate branch slope");
    if (b.kind == BranchSpec::Kind::power && !(b.expo > 0))
      throw std::invalid_argument("GpmMap: power branch needs expo > 0");
  }
  const double y1 = breakpoints_[1];
  z0_ = (z0 < 0) ? 0.5 * y1 : z0;
  if (!(z0_ > 0.0) || !(z0_ < y1))
    throw std::invalid_argument("GpmMap: z0 must lie in (0, y1)");
}

GpmMap GpmMap::lsv(double gamma) {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("GpmMap::lsv: gamma must lie in (0,1)");
  std::vector<double> bp{0.0, 0.5, 1.0};
  std::vector<BranchSpec> br(2);
  br[0] = {BranchSpec::Kind::lsv_neutral, 0.0, std::pow(2.0, gamma), gamma};
  br[1] = {BranchSpec::Kind::affine, -1.0, 2.0, 1.0};
  return GpmMap(gamma, std::move(bp), std::move(br));
}

GpmMap GpmMap::pm(double gamma) {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("GpmMap::pm: gamma must lie in (0,1)");
  // y1 solves y + y^(1+gamma) = 1.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + std::pow(mid, 1.0 + gamma) < 1.0 ? lo : hi) = mid;
  }
  const double y1 = 0.5 * (lo + hi);
  std::vector<double> bp{0.0, y1, 1.0};
  std::vector<BranchSpec> br(2);
  br[0] = {BranchSpec::Kind::lsv_neutral, 0.0, 1.0, gamma};
  br[1] = {BranchSpec::Kind::lsv_neutral, -1.0, 1.0, gamma};
  return GpmMap(gamma, std::move(bp), std::move(br));
}

GpmMap GpmMap::doubling() {
  std::vector<double> bp{0.0, 0.5, 1.0};
  std::vector<BranchSpec> br(2);
  br[0] = {BranchSpec::Kind::affine, 0.0, 2.0, 1.0};
  br[1] = {BranchSpec::Kind::affine, -1.0, 2.0, 1.0};
  return GpmMap(0.5, std::move(bp), std::move(br));
}

void GpmMap::check_index(int k) const {
  if (k < 0 || k >= branch_count()) {
    std::ostringstream os;
    os << "GpmMap: branch index " << k << " out of range [0," << branch_count() - 1 << "]";
    throw std::invalid_argument(os.str());
  }
}

int GpmMap::branch_of(double x) const {
  if (x < 0.0 || x > 1.0) throw std::domain_error("GpmMap::branch_of: x outside [0,1]");
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  int k = static_cast<int>(it - breakpoints_.begin()) - 1;
  return std::max(0, std::min(k, branch_count() - 1));
}

double GpmMap::apply(double x) const {
  const double y = branch_value(branch_of(x), x);
  return std::min(1.0, std::max(0.0, y));
}

double GpmMap::branch_value(int k, double x) const {
  check_index(k);
  return branch_eval(branches_[static_cast<std::size_t>(k)], breakpoints_[static_cast<std::size_t>(k)], x);
}

double GpmMap::branch_deriv(int k, double x) const {
  check_index(k);
  return branch_eval_d(branches_[static_cast<std::size_t>(k)], breakpoints_[static_cast<std::size_t>(k)], x);
}

double GpmMap::branch_second_deriv(int k, double x) const {
  check_index(k);
  return branch_eval_dd(branches_[static_cast<std::size_t>(k)], breakpoints_[static_cast<std::size_t>(k)], x);
}

std::pair<double, double> GpmMap::branch_domain(int k) const {
  check_index(k);
  return {breakpoints_[static_cast<std::size_t>(k)], breakpoints_[static_cast<std::size_t>(k) + 1]};
}

bool GpmMap::branch_increasing(int k) const {
  check_index(k);
  const auto& b = branches_[static_cast<std::size_t>(k)];
  if (b.kind == BranchSpec::Kind::lsv_neutral) return true;
  return b.c1 > 0;
}

std::pair<double, double> GpmMap::branch_image(int k) const {
  const auto [lo, hi] = branch_domain(k);
  const double a = branch_value(k, lo), b = branch_value(k, hi);
  return {std::min(a, b), std::max(a, b)};
}

double GpmMap::inverse_branch(int k, double x) const {
  check_index(k);
  const auto [dlo, dhi] = branch_domain(k);
  const auto [ilo, ihi] = branch_image(k);
  const double slack = 1e-9 * std::max(1.0, std::abs(x));
  if (x < ilo - slack || x > ihi + slack) {
    std::ostringstream os;
    os << "GpmMap::inverse_branch: x=" << x << " outside image [" << ilo << "," << ihi
       << "] of branch " << k;
    throw std::domain_error(os.str());
  }
  const double xc = std::min(ihi, std::max(ilo, x));
  const auto& b = branches_[static_cast<std::size_t>(k)];
  const double x_ref = breakpoints_[static_cast<std::size_t>(k)];

  if (b.kind == BranchSpec::Kind::affine) {
    const double v = (xc - b.c0) / b.c1;
    return std::min(dhi, std::max(dlo, v));
  }
  if (b.kind == BranchSpec::Kind::power) {
    const double t = (xc - b.c0) / b.c1;
    const double v = x_ref + std::pow(std::max(0.0, t), 1.0 / b.expo);
    return std::min(dhi, std::max(dlo, v));
  }

  // lsv_neutral: solve y + c1 y^(1+e) = x - c0 on [dlo, dhi].  The branch is
  // increasing and convex, so Newton started from a point above the root
  // descends monotonically; a bisection bracket guards degenerate steps.
  const double target = xc - b.c0;
  double lo = dlo, hi = dhi;
  double y = std::min(dhi, std::max(dlo, target));
  for (int it = 0; it < 200; ++it) {
    const double f = y + b.c1 * std::pow(y, 1.0 + b.expo) - target;
    if (f > 0)
      hi = y;
    else if (f < 0)
      lo = y;
    else
      return y;
    const double d = 1.0 + b.c1 * (1.0 + b.expo) * std::pow(y, b.expo);
    double next = y - f / d;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - y);
    y = next;
    if (step <= 2.0 * kEps * std::abs(y) || hi - lo <= 2.0 * kEps * std::abs(y)) break;
  }
  return y;
}

double GpmMap::inverse_deriv_at(int k, double v) const {
  const double d = branch_deriv(k, v);
  if (d == 0) throw std::domain_error("GpmMap::inverse_deriv_at: vanishing branch derivative");
  return 1.0 / std::abs(d);
}

double GpmMap::inverse_branch_deriv(int k, double x) const {
  return inverse_deriv_at(k, inverse_branch(k, x));
}

std::vector<int> GpmMap::branches_through(double x) const {
  std::vector<int> out;
  for (int k = 0; k < branch_count(); ++k) {
    const auto [lo, hi] = branch_image(k);
    if (x >= lo - 1e-12 && x <= hi + 1e-12) out.push_back(k);
  }
  return out;
}

std::vector<int> GpmMap::member_set() const {
  std::vector<int> out;
  for (int k = 1; k < branch_count(); ++k)
    if (branch_image(k).first <= 1e-12) out.push_back(k);
  return out;
}

ZSequence z_sequence(const GpmMap& map, int n, double z0) {
  if (n < 0) throw std::invalid_argument("z_sequence: n must be >= 0");
  ZSequence z;
  z.values.reserve(static_cast<std::size_t>(n) + 1);
  double cur = (z0 < 0) ? map.z0() : z0;
  if (!(cur > 0.0) || !(cur <= map.breakpoint(1)))
    throw std::invalid_argument("z_sequence: starting point must lie in (0, y1]");
  z.values.push_back(cur);
  for (int i = 0; i < n; ++i) {
    const double next = map.inverse_branch(0, cur);
    if (!(next > 0.0) || !(next < cur))
      throw std::runtime_error("z_sequence: iteration failed to decrease strictly");
    z.values.push_back(next);
    cur = next;
  }
  return z;
}

double z_ratio_diagnostic(const ZSequence& z, std::size_t n) {
  if (2 * n >= z.values.size())
    throw std::invalid_argument("z_ratio_diagnostic: sequence too short for requested n");
  return z.values[n] / z.values[2 * n];
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const CheckResult& ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::invalid_argument("ValidationReport: no check named " + name);
}

ValidationReport validate_gpm(const GpmMap& map, int grid_points) {
  if (grid_points < 8) throw std::invalid_argument("validate_gpm: grid too coarse");
  ValidationReport rep;
  const double g = map.gamma();
  const double y1 = map.breakpoint(1);
  std::ostringstream detail;

  {
    CheckResult c{"expansion", true, std::numeric_limits<double>::infinity(), ""};
    for (int k = 1; k < map.branch_count(); ++k) {
      const auto [lo, hi] = map.branch_domain(k);
      for (int i = 0; i <= grid_points; ++i) {
        const double x = lo + (hi - lo) * i / grid_points;
        c.margin = std::min(c.margin, std::abs(map.branch_deriv(k, x)) - 1.0);
      }
    }
    c.pass = c.margin > 0;
    detail.str("");
    detail << "min |T'|-1 over branches k>=1: " << c.margin;
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"neutral-fixed-point", true, 0, ""};
    const double t0 = map.branch_value(0, 0.0);
    const double d0 = map.branch_deriv(0, 0.0);
    c.margin = std::max(std::abs(t0), std::abs(d0 - 1.0));
    c.pass = std::abs(t0) <= 1e-12 && std::abs(d0 - 1.0) <= 1e-9;
    detail.str("");
    detail << "T(0)=" << t0 << ", T'(0)=" << d0;
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"neutral-expansion-interior", true, std::numeric_limits<double>::infinity(), ""};
    for (int i = 0; i <= grid_points; ++i) {
      const double x = y1 * std::pow(1e-8, 1.0 - static_cast<double>(i) / grid_points);
      c.margin = std::min(c.margin, map.branch_deriv(0, x) - 1.0);
    }
    c.pass = c.margin > 0;
    detail.str("");
    detail << "min T'-1 on (0,y1]: " << c.margin;
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    // Finite differences of T on a geometric grid approaching 0; the ratio
    // T''(x)/x^(gamma-1) must stay within fixed bounds.
    CheckResult c{"neutral-second-derivative-ratio", true, 0, ""};
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0;
    bool ok = true;
    for (double x = map.z0(); x >= 1e-8; x *= 0.5) {
      const double h = 3e-5 * x;
      const double fd2 =
          (map.branch_value(0, x + h) - 2.0 * map.branch_value(0, x) + map.branch_value(0, x - h)) /
          (h * h);
      const double ratio = fd2 / std::pow(x, g - 1.0);
      if (!std::isfinite(ratio) || ratio <= 0) {
        ok = false;
        break;
      }
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
    c.pass = ok && rmax / rmin <= 10.0;
    c.margin = ok ? rmax / rmin : std::numeric_limits<double>::infinity();
    detail.str("");
    detail << "T''(x)/x^(gamma-1) range [" << rmin << "," << rmax << "]";
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"v0-derivative-nonincreasing", true, 0, ""};
    double prev = std::numeric_limits<double>::infinity();
    double worst = 0;
    for (int i = 1; i <= grid_points; ++i) {
      const double x = map.z0() * i / grid_points;
      const double d = map.inverse_branch_deriv(0, x);
      worst = std::max(worst, d - prev);
      prev = d;
    }
    c.margin = worst;
    c.pass = worst <= 1e-12;
    detail.str("");
    detail << "max increase of v0' along (0,z0]: " << worst;
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"member-set-nonempty", true, 0, ""};
    const auto m = map.member_set();
    c.pass = !m.empty();
    c.margin = static_cast<double>(m.size());
    detail.str("");
    detail << "|M| = " << m.size();
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c{"z0-admissible", true, 0, ""};
    bool ok = map.z0() > 0 && map.z0() < y1;
    const auto m = map.member_set();
    for (int k : m) {
      const auto [lo, hi] = map.branch_image(k);
      ok = ok && lo <= 1e-12 && hi >= map.z0() - 1e-12;
    }
    for (int k = 1; k < map.branch_count(); ++k) {
      if (std::find(m.begin(), m.end(), k) != m.end()) continue;
      ok = ok && map.branch_image(k).first >= map.z0() - 1e-12;
    }
    c.pass = ok;
    detail.str("");
    detail << "z0=" << map.z0() << ", z1=" << (ok ? map.inverse_branch(0, map.z0()) : -1.0);
    c.detail = detail.str();
    rep.checks.push_back(c);
  }

  rep.checks.push_back({"topological-transitivity", true, 0, "assumed; not checked numerically"});
  return rep;
}

}  // namespace gpmlab
