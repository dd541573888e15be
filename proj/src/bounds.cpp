#include "gpmlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpmlab/rng.hpp"

namespace gpmlab {

double bennett_h(double u) {
  if (u <= 0) return 0;
  return (1 + u) * std::log1p(u) - u;
}

RsPair::RsPair(const TailSpec& tail, AlphaFn alpha2, int n)
    : tail_(&tail), alpha2_(std::move(alpha2)), n_(n) {
  if (n <= 0) throw std::invalid_argument("RsPair: n >= 1");
}

double RsPair::R(double u) const {
  // First q with alpha2(q) <= u, by binary search on the nonincreasing
  // sequence; capped at n.
  int lo = 0, hi = n_;
  if (alpha2_(0) <= u) {
    hi = 0;
  } else if (alpha2_(n_) > u) {
    hi = n_;
  } else {
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (alpha2_(mid) <= u) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  return static_cast<double>(hi) * tail_->Q(u);
}

double RsPair::S(double v) const {
  if (R(1.0) > v) return 1.0;
  double lo = 0, hi = 1;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (R(mid) <= v) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double s2_floor(const TailSpec& tail, const AlphaFn& alpha1, int n) {
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += tail.integral_Q_pow(2, alpha1(i));
  return 4.0 * static_cast<double>(n) * sum;
}

FnBound fn_maximal_bound(const TailSpec& tail, const AlphaFn& alpha1, const AlphaFn& alpha2,
                         int n, double x, double r, double s2) {
  if (!(x > 0) || !(r >= 1)) throw std::invalid_argument("fn bound: x > 0, r >= 1");
  FnBound out;
  out.s2_required = s2_floor(tail, alpha1, n);
  if (s2 < out.s2_required * (1 - 1e-12))
    throw std::domain_error("fn bound: s^2 below the 4n sum int Q^2 contract");

  const double u = 2 * x * x / (r * s2);
  out.exponential = 4 * std::exp(-(r * r * s2 / (8 * x * x)) * bennett_h(u));
  out.algebraic = 4 * std::pow(1 + u, -r / 8);

  RsPair rs(tail, alpha2, n);
  out.s_of_x_over_r = rs.S(x / r);
  out.integral_term = static_cast<double>(n) * (6 / x + 16 * x / (r * s2)) *
                      tail.integral_Q_pow(1, out.s_of_x_over_r);
  out.total = out.exponential + out.integral_term;
  out.total_algebraic = out.algebraic + out.integral_term;
  return out;
}

BestFnBound best_fn_bound(const TailSpec& tail, const AlphaFn& alpha1, const AlphaFn& alpha2,
                          int n, double x, double s2) {
  const double r_top = std::max(1.0, 8 * clamped_loglog(static_cast<double>(n)));
  std::vector<double> grid;
  for (double r = 1; r < r_top; r *= 2) grid.push_back(r);
  grid.push_back(r_top);

  BestFnBound best;
  best.value = std::numeric_limits<double>::infinity();
  for (double r : grid) {
    FnBound b = fn_maximal_bound(tail, alpha1, alpha2, n, x, r, s2);
    if (b.total < best.value) {
      best.value = b.total;
      best.r = r;
      best.detail = b;
    }
  }
  return best;
}

DominationReport domination_test_fn(const GpmMap& map, const DensityModel& density,
                                    const ObservableSpec& f, const TailSpec& tail,
                                    const AlphaFn& alpha1, const AlphaFn& alpha2, int n,
                                    const std::vector<double>& x_grid, std::size_t replicas,
                                    std::uint64_t seed) {
  if (x_grid.empty() || replicas == 0)
    throw std::invalid_argument("domination test: need x points and replicas");

  StreamFactory factory = chain_stream_factory(map, density, f, seed);
  std::vector<double> sups = run_replicas(
      factory, replicas, [n](ValueStream& stream) {
        double s = 0, m = 0;
        for (int i = 0; i < n; ++i) {
          s += stream();
          m = std::max(m, std::abs(s));
        }
        return m;
      });

  const double s2 = s2_floor(tail, alpha1, n);
  DominationReport rep;
  rep.replicas = replicas;
  rep.all_pass = true;
  for (double x : x_grid) {
    DominationPoint pt;
    pt.x = x;
    std::size_t hits = 0;
    for (double m : sups)
      if (m >= 5 * x) ++hits;
    const WilsonInterval wi = wilson_interval(hits, replicas);
    pt.mc_probability = wi.point;
    pt.wilson_upper = wi.upper;
    BestFnBound best = best_fn_bound(tail, alpha1, alpha2, n, x, s2);
    pt.bound = best.value;
    pt.r_used = best.r;
    pt.pass = pt.wilson_upper <= pt.bound;
    rep.all_pass = rep.all_pass && pt.pass;
    rep.points.push_back(pt);
  }
  return rep;
}

LilConstant lil_constant(const TailSpec& tail, const AlphaFn& alpha1, int k_max) {
  if (k_max < 16) throw std::invalid_argument("lil_constant: k_max >= 16");
  LilConstant out;
  out.term0 = tail.integral_Q_pow(2, alpha1(0));

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) terms.push_back(tail.integral_Q_pow(2, alpha1(k)));
  for (double t : terms) out.series_from1 += t;

  const double scale = std::max(out.term0, out.series_from1);
  const std::size_t lo = static_cast<std::size_t>(k_max) / 2;
  double window_max = 0;
  for (std::size_t i = lo - 1; i < terms.size(); ++i) window_max = std::max(window_max, terms[i]);
  if (window_max < 1e-15 * std::max(1.0, scale)) {
    out.tail_estimate = 0;
  } else {
    out.fit = fit_loglog_range(terms, lo, static_cast<std::size_t>(k_max));
    if (!out.fit.valid || out.fit.slope > -1.02)
      throw std::runtime_error("lil_constant: Q^2 series shows no summable decay");
    out.tail_estimate =
        out.fit.eval(static_cast<double>(k_max)) * static_cast<double>(k_max) / (-out.fit.slope - 1);
  }

  const double total = out.term0 + out.series_from1;
  out.a_chain = 20 * std::sqrt(total + out.tail_estimate);
  out.a_map = 40 * std::sqrt(2.0) * std::sqrt(out.series_from1 + out.tail_estimate);
  out.tail_relative = out.tail_estimate / std::max(total, 1e-300);
  return out;
}

double pinelis_bound(double c, double y, double x) {
  if (!(c > 0) || !(y > 0) || !(x > 0)) throw std::invalid_argument("pinelis: c, y, x > 0");
  return 2 * std::exp(-(y / (c * c)) * bennett_h(x * c / y));
}

PinelisTest pinelis_martingale_test(double c, std::size_t n, double x, std::size_t replicas,
                                    std::uint64_t seed) {
  PinelisTest out;
  const double y = static_cast<double>(n) * c * c;
  out.bound = pinelis_bound(c, y, x);

  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(seed, r);
    double m = 0;
    bool hit = false;
    std::uint64_t bits = 0;
    int avail = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (avail == 0) {
        bits = rng.next();
        avail = 64;
      }
      m += (bits & 1ULL) ? c : -c;
      bits >>= 1;
      --avail;
      if (std::abs(m) >= x) {
        hit = true;
        break;
      }
    }
    if (hit) ++out.hits;
  }
  const WilsonInterval wi = wilson_interval(out.hits, replicas);
  out.mc_probability = wi.point;
  out.wilson_upper = wi.upper;
  out.pass = out.wilson_upper <= out.bound;
  return out;
}

double rio_covariance_bound(const TailSpec& tail, const AlphaFn& alpha1, int lag) {
  return 4 * tail.integral_Q_pow(2, alpha1(lag));
}

SllnSeriesBound slln_series_bound(const TailSpec& tail, const AlphaFn& alpha1, double p,
                                  double gamma, int k_max) {
  if (!(p > 1) || !(p < 2)) throw std::invalid_argument("slln series: p in (1,2)");
  if (!(gamma > 0) || !(gamma < 1 / p)) throw std::invalid_argument("slln series: gamma in (0,1/p)");
  if (k_max < 16) throw std::invalid_argument("slln series: k_max >= 16");

  SllnSeriesBound out;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int i = 0; i <= k_max; ++i) {
    const double weight =
        std::pow(static_cast<double>(i + 1), p - 1) - std::pow(static_cast<double>(i), p - 1);
    terms.push_back(weight * tail.integral_Q_pow(p, alpha1(i)));
  }
  double sum = 0;
  for (double t : terms) sum += t;
  out.series_value = sum;

  const std::size_t lo = static_cast<std::size_t>(k_max) / 2;
  double window_max = 0;
  for (std::size_t i = lo - 1; i < terms.size(); ++i) window_max = std::max(window_max, terms[i]);
  if (window_max < 1e-15 * std::max(1.0, sum)) {
    out.series_finite = true;
    out.tail_estimate = 0;
  } else {
    out.fit = fit_loglog_range(terms, lo, terms.size());
    out.series_finite = out.fit.valid && out.fit.slope < -1.02;
    if (out.series_finite) {
      out.tail_estimate = out.fit.eval(static_cast<double>(terms.size())) *
                          static_cast<double>(terms.size()) / (-out.fit.slope - 1);
      out.series_value += out.tail_estimate;
    }
  }

  // Reduced integral: u^{-e'} Q^p with e' = g(p-1)/(1-g); finiteness by the
  // same exponent algebra that settles the moment condition.
  const double ep = gamma * (p - 1) / (1 - gamma);
  switch (tail.family()) {
    case TailSpec::Family::cutoff:
      out.proxy_finite = true;
      break;
    case TailSpec::Family::power:
      out.proxy_finite = ep + p / tail.q() < 1;
      break;
    case TailSpec::Family::power_log: {
      const double s = ep + p / tail.q();
      const double log_pow = tail.b() * p / tail.q();
      out.proxy_finite = s < 1 || (s == 1 && log_pow > 1);
      break;
    }
  }
  if (out.proxy_finite) {
    const auto integrand = [&tail, p, ep](double u) {
      return std::pow(u, -ep) * std::pow(tail.Q(u), p);
    };
    const double s = (tail.family() == TailSpec::Family::cutoff) ? ep : ep + p / tail.q();
    if (tail.family() == TailSpec::Family::power_log && !(s < 1)) {
      // Critical exponent: the integrand is u^{-1} times a negative power of
      // log(1/u), so substitute u = e^{-t} and close with the algebraic tail.
      const double log_pow = tail.b() * p / tail.q();
      const auto in_t = [&integrand](double t) {
        const double u = std::exp(-t);
        return u * integrand(u);
      };
      double t1 = 64;
      for (int round = 0; round < 4; ++round) {
        const double body = integrate_adaptive(in_t, 0.0, t1, 1e-9);
        const double tail_int = in_t(t1) * t1 / (log_pow - 1);
        out.proxy_value = body + tail_int;
        if (tail_int <= 1e-9 * body) break;
        t1 *= 2;
      }
    } else {
      const double eta =
          (tail.family() == TailSpec::Family::power_log) ? s + 0.3 * (1 - s) : s;
      out.proxy_value = integrate_unit_singular(integrand, eta);
    }
  } else {
    out.proxy_value = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace gpmlab
