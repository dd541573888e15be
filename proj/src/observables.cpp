#include "gpmlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TailSpec TailSpec::power(double x0, double q) {
  if (!(x0 > 0) || !(q > 0)) throw std::invalid_argument("TailSpec::power: need x0 > 0, q > 0");
  TailSpec t;
  t.family_ = Family::power;
  t.x0_ = x0;
  t.q_ = q;
  return t;
}

TailSpec TailSpec::power_log(double x0, double q, double b) {
  if (!(x0 > 0) || !(q > 0)) throw std::invalid_argument("TailSpec::power_log: need x0 > 0, q > 0");
  if (!(b > -q)) throw std::invalid_argument("TailSpec::power_log: need b > -q for monotone H");
  TailSpec t;
  t.family_ = Family::power_log;
  t.x0_ = x0;
  t.q_ = q;
  t.b_ = b;
  // Bracket seeds for the numeric inversion: exact Q at log-spaced u.
  const int n = 257;
  t.cache_u_.resize(n);
  t.cache_x_.resize(n);
  for (int j = 0; j < n; ++j) {
    const double u = std::exp(std::log(1e-18) * (n - 1 - j) / (n - 1));
    t.cache_u_[static_cast<std::size_t>(j)] = u;
    double lo = x0, hi = 2 * x0;
    while (t.H(hi) > u) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (t.H(mid) > u ? lo : hi) = mid;
    }
    t.cache_x_[static_cast<std::size_t>(j)] = hi;
  }
  return t;
}

TailSpec TailSpec::cutoff(double level, double bound) {
  if (!(level > 0) || level > 1 || !(bound > 0))
    throw std::invalid_argument("TailSpec::cutoff: need level in (0,1], bound > 0");
  TailSpec t;
  t.family_ = Family::cutoff;
  t.level_ = level;
  t.bound_ = bound;
  return t;
}

double TailSpec::H(double x) const {
  if (x < 0) throw std::domain_error("TailSpec::H: negative argument");
  switch (family_) {
    case Family::power:
      return (x <= x0_) ? 1.0 : std::pow(x / x0_, -q_);
    case Family::power_log:
      return (x <= x0_) ? 1.0
                        : std::pow(x / x0_, -q_) * std::pow(1.0 + std::log(x / x0_), -b_);
    case Family::cutoff:
      return (x < bound_) ? level_ : 0.0;
  }
  return 0;
}

double TailSpec::Q(double u) const {
  switch (family_) {
    case Family::power:
      if (u >= 1.0) return 0.0;
      if (u <= 0.0) return kInf;
      return x0_ * std::pow(u, -1.0 / q_);
    case Family::cutoff:
      return (u < level_) ? bound_ : 0.0;
    case Family::power_log: {
      if (u >= 1.0) return 0.0;
      if (u <= 0.0) return kInf;
      const auto it = std::lower_bound(cache_u_.begin(), cache_u_.end(), u);
      double lo, hi;
      if (it == cache_u_.begin()) {
        lo = cache_x_.back();
        hi = 2 * lo;
        while (H(hi) > u) hi *= 2;
      } else if (it == cache_u_.end()) {
        lo = x0_;
        hi = cache_x_.front();
      } else {
        const std::size_t j = static_cast<std::size_t>(it - cache_u_.begin());
        lo = cache_x_[j];
        hi = cache_x_[j - 1];
      }
      for (int i = 0; i < 120 && hi - lo > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (H(mid) > u ? lo : hi) = mid;
      }
      return hi;
    }
  }
  return 0;
}

bool TailSpec::Q_pow_integrable(double m) const {
  if (!(m > 0)) throw std::invalid_argument("TailSpec: moment order must be positive");
  switch (family_) {
    case Family::cutoff:
      return true;
    case Family::power:
      return m < q_;
    case Family::power_log:
      return m < q_ || (m == q_ && b_ > 1.0);
  }
  return false;
}

double TailSpec::integral_Q_pow(double m, double a) const {
  if (!(m > 0)) throw std::invalid_argument("TailSpec::integral_Q_pow: m must be positive");
  a = std::min(1.0, std::max(0.0, a));
  if (a == 0) return 0;
  if (!Q_pow_integrable(m)) return kInf;
  switch (family_) {
    case Family::cutoff:
      return std::pow(bound_, m) * std::min(a, level_);
    case Family::power:
      return std::pow(x0_, m) * std::pow(a, 1.0 - m / q_) / (1.0 - m / q_);
    case Family::power_log: {
      const double eta = m / q_;
      if (eta < 1.0) {
        const double eta_eff = (b_ < 0) ? eta + 0.3 * (1.0 - eta) : eta;
        return integrate_unit_singular(
            [&](double w) { return a * std::pow(Q(a * w), m); }, eta_eff, 1e-9);
      }
      // m == q, b > 1: substitute u = e^{-t}; the integrand becomes
      // x0^q (1 + log(Q/x0))^{-b} with algebraic tail t^{-b}.
      const double t0 = std::log(1.0 / a);
      const auto f = [&](double t) {
        const double qq = Q(std::exp(-t));
        return std::pow(x0_, m) * std::pow(1.0 + std::log(qq / x0_), -b_);
      };
      double t1 = std::max(t0 + 10.0, 50.0);
      double body = 0;
      for (int round = 0; round < 60; ++round) {
        body = integrate_adaptive(f, t0, t1, 1e-9);
        const double tail_est = f(t1) * t1 / (b_ - 1.0);
        if (tail_est <= 1e-10 * body) return body + tail_est;
        t1 *= 2;
      }
      return body + f(t1) * t1 / (b_ - 1.0);
    }
  }
  return kInf;
}

bool TailSpec::xH_integrable() const {
  switch (family_) {
    case Family::cutoff:
      return true;
    case Family::power:
      return q_ > 2.0;
    case Family::power_log:
      return q_ > 2.0 || (q_ == 2.0 && b_ > 1.0);
  }
  return false;
}

std::string TailSpec::describe() const {
  std::ostringstream os;
  switch (family_) {
    case Family::power:
      os << "power(x0=" << x0_ << ", q=" << q_ << ")";
      break;
    case Family::power_log:
      os << "power_log(x0=" << x0_ << ", q=" << q_ << ", b=" << b_ << ")";
      break;
    case Family::cutoff:
      os << "cutoff(level=" << level_ << ", bound=" << bound_ << ")";
      break;
  }
  return os.str();
}

namespace {

// integral of x^{p-1} H(x)^e dx over (0, inf); finiteness by exponent algebra.
double moment_integral(const TailSpec& tail, double p, double e) {
  switch (tail.family()) {
    case TailSpec::Family::cutoff:
      return std::pow(tail.level(), e) * std::pow(tail.bound(), p) / p;
    case TailSpec::Family::power: {
      const double qe = tail.q() * e;
      if (qe <= p) return kInf;
      return std::pow(tail.x0(), p) * (1.0 / p + 1.0 / (qe - p));
    }
    case TailSpec::Family::power_log: {
      const double qe = tail.q() * e;
      const double be = tail.b() * e;
      const double head = std::pow(tail.x0(), p) / p;
      if (qe == p) return (be > 1.0) ? head + std::pow(tail.x0(), p) / (be - 1.0) : kInf;
      if (qe < p) return kInf;
      // x = x0 e^t: integral of x0^p e^{-(qe-p)t} (1+t)^{-be} dt over (0, inf).
      const auto f = [&](double t) {
        return std::pow(tail.x0(), p) * std::exp(-(qe - p) * t) * std::pow(1.0 + t, -be);
      };
      double t1 = std::max(5.0, 30.0 / (qe - p));
      for (int round = 0; round < 60; ++round) {
        const double body = integrate_adaptive(f, 0.0, t1, 1e-10);
        const double tail_est = f(t1) / (qe - p);
        if (tail_est <= 1e-10 * body) return head + body + tail_est;
        t1 *= 2;
      }
      return head + integrate_adaptive(f, 0.0, t1, 1e-10);
    }
  }
  return kInf;
}

}  // namespace

ConditionResult check_condition(const TailSpec& tail, double gamma, double p,
                                const std::string& which) {
  if (!(p > 1.0) || p > 2.0) throw std::invalid_argument("check_condition: need p in (1,2]");
  if (!(gamma > 0) || !(gamma < 1.0 / p))
    throw std::invalid_argument("check_condition: need gamma in (0, 1/p)");
  if (which == "lil" && p != 2.0)
    throw std::invalid_argument("check_condition: lil requires p = 2");

  const double e = (1.0 - p * gamma) / (1.0 - gamma);
  ConditionResult res;
  res.which = which;

  if (which == "lil" || which == "rate") {
    res.value = moment_integral(tail, p, e);
    res.holds = std::isfinite(res.value);
    return res;
  }
  if (which == "rate_weak") {
    // best C with H(x)^e <= C x^{-p}, i.e. C = sup_x x^p H(x)^e.
    switch (tail.family()) {
      case TailSpec::Family::cutoff:
        res.value = std::pow(tail.bound(), p) * std::pow(tail.level(), e);
        res.holds = true;
        return res;
      case TailSpec::Family::power: {
        const double qe = tail.q() * e;
        res.holds = qe >= p;
        res.value = res.holds ? std::pow(tail.x0(), p) : kInf;
        return res;
      }
      case TailSpec::Family::power_log: {
        const double qe = tail.q() * e;
        const double be = tail.b() * e;
        if (qe < p || (qe == p && be < 0)) {
          res.holds = false;
          res.value = kInf;
          return res;
        }
        double best = 0;
        for (int j = 0; j <= 4096; ++j) {
          const double x = tail.x0() * std::exp(60.0 * j / 4096.0);
          best = std::max(best, std::pow(x, p) * std::pow(tail.H(x), e));
        }
        res.value = best;
        res.holds = true;
        return res;
      }
    }
  }
  throw std::invalid_argument("check_condition: which must be lil, rate or rate_weak");
}

ChangeOfVariablesResult change_of_variables_identity(const TailSpec& tail, double gamma,
                                                     double p) {
  const ConditionResult rate = check_condition(tail, gamma, p, "rate");
  if (!rate.holds)
    throw std::domain_error("change_of_variables_identity: rate integral diverges for " +
                            tail.describe());
  const double e = (1.0 - p * gamma) / (1.0 - gamma);

  ChangeOfVariablesResult res;
  res.rhs = p * rate.value / e;
  if (tail.family() == TailSpec::Family::cutoff) {
    res.lhs = std::pow(tail.bound(), p) * std::pow(tail.level(), e) / e;
  } else {
    const double power_part = (1.0 - e) + p / tail.q();
    const bool logs = tail.family() == TailSpec::Family::power_log;
    const double eta_eff = logs ? power_part + 0.3 * (1.0 - power_part) : power_part;
    if (!(power_part < 1.0))
      throw std::domain_error("change_of_variables_identity: quantile integral diverges");
    res.lhs = integrate_unit_singular(
        [&](double u) { return std::pow(u, e - 1.0) * std::pow(tail.Q(u), p); }, eta_eff, 1e-9);
  }
  res.rel_gap = std::abs(res.lhs - res.rhs) / std::max(std::abs(res.lhs), 1e-300);
  return res;
}

double Piece::eval(double x) const {
  if (x <= lo || x >= hi) return 0;
  switch (form) {
    case Form::inv_left:
      return std::pow(x, -a);
    case Form::inv_right:
      return std::pow(1.0 - x, -a);
    case Form::inv_center:
      return std::pow(std::abs(x - c), -a);
    case Form::log_center:
      return std::log(std::abs(x - c));
    case Form::affine:
      return a * x + c;
    case Form::indicator:
      return 1.0;
  }
  return 0;
}

ObservableSpec::ObservableSpec(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("ObservableSpec: no pieces");
  double wsum = 0;
  for (const auto& p : pieces_) {
    if (!(p.lo >= 0) || !(p.lo < p.hi) || !(p.hi <= 1))
      throw std::invalid_argument("ObservableSpec: piece support must satisfy 0 <= lo < hi <= 1");
    const bool inv = p.form == Piece::Form::inv_left || p.form == Piece::Form::inv_right ||
                     p.form == Piece::Form::inv_center;
    if (inv && (!(p.a > 0) || !(p.a < 1)))
      throw std::invalid_argument("ObservableSpec: singular exponent must lie in (0,1)");
    const bool centered = p.form == Piece::Form::inv_center || p.form == Piece::Form::log_center;
    if (centered && p.c > p.lo && p.c < p.hi)
      throw std::invalid_argument(
          "ObservableSpec: center inside the open support breaks monotonicity");
    wsum += std::abs(p.weight);
  }
  scale_ = std::max(1.0, wsum);

  std::vector<std::pair<double, double>> iv;
  for (const auto& p : pieces_) iv.emplace_back(p.lo, p.hi);
  std::sort(iv.begin(), iv.end());
  for (std::size_t i = 0; i + 1 < iv.size(); ++i)
    if (iv[i + 1].first < iv[i].second - 1e-15) disjoint_ = false;
}

double ObservableSpec::eval(double x) const {
  double v = 0;
  for (std::size_t l = 0; l < pieces_.size(); ++l) v += norm_weight(l) * pieces_[l].eval(x);
  return v;
}

ObservableSpec ObservableSpec::power_singularity(double a, double weight) {
  Piece p;
  p.form = Piece::Form::inv_left;
  p.weight = weight;
  p.lo = 0;
  p.hi = 1;
  p.a = a;
  return ObservableSpec({p});
}

ObservableSpec ObservableSpec::indicator(double lo, double hi, double weight) {
  Piece p;
  p.form = Piece::Form::indicator;
  p.weight = weight;
  p.lo = lo;
  p.hi = hi;
  return ObservableSpec({p});
}

Eigen::VectorXd to_grid_function(const ObservableSpec& obs, const Grid& grid) {
  Eigen::VectorXd f(grid.cells());
  for (int i = 0; i < grid.cells(); ++i) f[i] = obs.eval(grid.center(i));
  return f;
}

namespace {

void validate_integrable(const ObservableSpec& obs, double gamma) {
  for (const auto& p : obs.pieces()) {
    if (p.form == Piece::Form::inv_left && p.lo == 0 && p.a + gamma >= 1.0) {
      std::ostringstream os;
      os << "observable piece x^{-" << p.a << "} is not nu-integrable: the density behaves like "
         << "x^{-" << gamma << "} near 0, so the exponent must stay below " << 1.0 - gamma;
      throw std::domain_error(os.str());
    }
    if (p.form == Piece::Form::inv_center && p.c == 0 && p.lo == 0 && p.a + gamma >= 1.0) {
      std::ostringstream os;
      os << "observable piece |x|^{-" << p.a << "} is not nu-integrable against density exponent "
         << gamma;
      throw std::domain_error(os.str());
    }
  }
}

// Quadrature over [s0, s1] with at most one singular endpoint of known
// strength; both-singular segments are halved first.
double integrate_segment(const std::function<double(double)>& f, double s0, double s1,
                         double eta_l, double eta_r) {
  const double len = s1 - s0;
  if (!(len > 0)) return 0;
  if (eta_l > 0 && eta_r > 0) {
    const double mid = 0.5 * (s0 + s1);
    return integrate_segment(f, s0, mid, eta_l, 0) + integrate_segment(f, mid, s1, 0, eta_r);
  }
  if (eta_l > 0)
    return integrate_unit_singular([&](double u) { return len * f(s0 + len * u); }, eta_l, 1e-9);
  if (eta_r > 0)
    return integrate_unit_singular([&](double u) { return len * f(s1 - len * u); }, eta_r, 1e-9);
  return integrate_adaptive(f, s0, s1, 1e-9);
}

double singular_strength(const Piece& p, double gamma, double x, bool is_left_end) {
  double power = 0;
  bool log_factor = false;
  if (x == 0) power += gamma;  // density splice
  switch (p.form) {
    case Piece::Form::inv_left:
      if (is_left_end && x == 0) power += p.a;
      break;
    case Piece::Form::inv_right:
      if (!is_left_end && x == 1.0) power += p.a;
      break;
    case Piece::Form::inv_center:
      if (x == p.c) power += p.a;
      break;
    case Piece::Form::log_center:
      if (x == p.c) log_factor = true;
      break;
    default:
      break;
  }
  if (power == 0 && !log_factor) return 0;
  const double margin = log_factor ? 0.3 : 0.0;
  return std::min(0.995, power + margin * (1.0 - power));
}

}  // namespace

double nu_mean(const ObservableSpec& obs, const DensityModel& density) {
  validate_integrable(obs, density.gamma());
  const std::vector<double>& nodes = density.interp_nodes();
  double total = 0;
  for (std::size_t l = 0; l < obs.pieces().size(); ++l) {
    const Piece& p = obs.pieces()[l];
    const double w = obs.norm_weight(l);
    if (w == 0) continue;

    std::vector<double> cuts{p.lo};
    for (const double nd : nodes)
      if (nd > p.lo && nd < p.hi) cuts.push_back(nd);
    cuts.push_back(p.hi);

    const auto f = [&](double x) { return p.eval(x) * density.interp_h(x); };
    double piece_int = 0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double eta_l = (s == 0) ? singular_strength(p, density.gamma(), cuts[s], true) : 0;
      const double eta_r =
          (s + 2 == cuts.size()) ? singular_strength(p, density.gamma(), cuts[s + 1], false) : 0;
      piece_int += integrate_segment(f, cuts[s], cuts[s + 1], eta_l, eta_r);
    }
    total += w * piece_int;
  }
  return total;
}

namespace {

double measure_clipped(const DensityModel& d, double lo, double hi, double a, double b) {
  return d.nu_interval(std::max(lo, a), std::min(hi, b));
}

double piece_level_set_measure(const Piece& p, double w, const DensityModel& d, double t) {
  const double aw = std::abs(w);
  if (aw == 0) return 0;
  if (t <= 0) return d.nu_interval(p.lo, p.hi);
  switch (p.form) {
    case Piece::Form::indicator:
      return (aw > t) ? d.nu_interval(p.lo, p.hi) : 0.0;
    case Piece::Form::inv_left: {
      const double xs = std::pow(aw / t, 1.0 / p.a);
      return measure_clipped(d, p.lo, p.hi, 0.0, xs);
    }
    case Piece::Form::inv_right: {
      const double ds = std::pow(aw / t, 1.0 / p.a);
      return measure_clipped(d, p.lo, p.hi, 1.0 - ds, 1.0);
    }
    case Piece::Form::inv_center: {
      const double ds = std::pow(aw / t, 1.0 / p.a);
      return measure_clipped(d, p.lo, p.hi, p.c - ds, p.c + ds);
    }
    case Piece::Form::log_center: {
      const double dn = std::exp(-t / aw), df = std::exp(t / aw);
      double m = measure_clipped(d, p.lo, p.hi, p.c - dn, p.c + dn);
      m += measure_clipped(d, p.lo, p.hi, 0.0, p.c - df);
      m += measure_clipped(d, p.lo, p.hi, p.c + df, 1.0);
      return m;
    }
    case Piece::Form::affine: {
      const double s = w * p.a, m0 = w * p.c;
      double m = 0;
      if (s == 0) return (std::abs(m0) > t) ? d.nu_interval(p.lo, p.hi) : 0.0;
      const double x_hi = (t - m0) / s;   // boundary of {w f > t}
      const double x_lo = (-t - m0) / s;  // boundary of {w f < -t}
      if (s > 0) {
        m += measure_clipped(d, p.lo, p.hi, x_hi, 1.0);
        m += measure_clipped(d, p.lo, p.hi, 0.0, x_lo);
      } else {
        m += measure_clipped(d, p.lo, p.hi, 0.0, x_hi);
        m += measure_clipped(d, p.lo, p.hi, x_lo, 1.0);
      }
      return m;
    }
  }
  return 0;
}

}  // namespace

double nu_tail(const ObservableSpec& obs, const DensityModel& density, double t) {
  if (!obs.disjoint_supports())
    throw std::invalid_argument("nu_tail: piece supports must be disjoint");
  validate_integrable(obs, density.gamma());
  double m = 0;
  for (std::size_t l = 0; l < obs.pieces().size(); ++l)
    m += piece_level_set_measure(obs.pieces()[l], obs.norm_weight(l), density, t);
  return m;
}

double empirical_quantile(const ObservableSpec& obs, const DensityModel& density, double u) {
  if (!(u > 0) || u > 1) throw std::invalid_argument("empirical_quantile: u must lie in (0,1]");
  if (nu_tail(obs, density, 0.0) <= u) return 0.0;
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (nu_tail(obs, density, hi) > u) {
    hi *= 2;
    if (++guard > 2000) throw std::runtime_error("empirical_quantile: tail does not drop below u");
  }
  for (int i = 0; i < 120 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (nu_tail(obs, density, mid) > u ? lo : hi) = mid;
  }
  return hi;
}

EmpiricalTail tail_of_observable(const ObservableSpec& obs, const DensityModel& density,
                                 const std::vector<double>& t_grid) {
  if (t_grid.size() < 2) throw std::invalid_argument("tail_of_observable: need at least two t");
  EmpiricalTail out;
  out.t = t_grid;
  out.H.reserve(t_grid.size());
  for (const double t : t_grid) {
    if (!(t >= 0)) throw std::invalid_argument("tail_of_observable: t must be nonnegative");
    out.H.push_back(nu_tail(obs, density, t));
  }
  out.fit = fit_loglog(out.t, out.H, out.t.front(), out.t.back(), 0.0);
  return out;
}

MembershipReport check_membership(const ObservableSpec& obs, const DensityModel& density,
                                  const TailSpec& tail, int probe_points) {
  if (probe_points < 4) throw std::invalid_argument("check_membership: too few probe points");
  MembershipReport rep;
  rep.holds_H = rep.holds_Q = true;
  for (int j = 0; j < probe_points; ++j) {
    const double u =
        std::exp(std::log(1e-6) * (probe_points - 1 - j) / (probe_points - 1)) * 0.999;
    const double q_ref = tail.Q(u);
    const double q_emp = empirical_quantile(obs, density, u);
    const double ratio_q = (q_ref > 0) ? q_emp / q_ref : (q_emp > 0 ? kInf : 0.0);
    rep.worst_Q = std::max(rep.worst_Q, ratio_q);

    const double t = (q_ref > 0) ? q_ref : 1e-12;
    const double h_ref = tail.H(t);
    const double h_emp = nu_tail(obs, density, t);
    const double ratio_h = (h_ref > 0) ? h_emp / h_ref : (h_emp > 0 ? kInf : 0.0);
    rep.worst_H = std::max(rep.worst_H, ratio_h);
  }
  rep.holds_Q = rep.worst_Q <= 1.0 + 1e-9;
  rep.holds_H = rep.worst_H <= 1.0 + 1e-9;
  return rep;
}

}  // namespace gpmlab
