#include "gpmlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmlab {

double LogLogFit::eval(double x) const {
  return std::exp(intercept + slope * std::log(x));
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                     double x_lo, double x_hi, double y_floor) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < x_lo || x[i] > x_hi) continue;
    if (!(y[i] > y_floor) || !(x[i] > 0)) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  LogLogFit fit;
  fit.points = lx.size();
  if (lx.size() < 3) return fit;

  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  if (lx.size() > 2) fit.slope_stderr = std::sqrt(ss / (n - 2) / sxx);
  fit.valid = true;
  return fit;
}

LogLogFit fit_loglog_range(const std::vector<double>& values, std::size_t n_lo, std::size_t n_hi,
                           double y_floor) {
  std::vector<double> x(values.size()), y(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    x[i] = static_cast<double>(i);
    y[i] = values[i];
  }
  return fit_loglog(x, y, static_cast<double>(n_lo), static_cast<double>(n_hi), y_floor);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = p + z2 / (2 * n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  WilsonInterval w;
  w.point = p;
  w.lower = std::max(0.0, (centre - half) / denom);
  w.upper = std::min(1.0, (centre + half) / denom);
  return w;
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  const double scale = std::max(std::abs(whole), 1e-300);
  return adapt(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth);
}

double integrate_unit_singular(const std::function<double(double)>& g, double eta,
                               double rel_tol) {
  if (eta >= 1.0) throw std::domain_error("integrate_unit_singular: non-integrable exponent");
  if (eta <= 0.0) return integrate_adaptive(g, 0.0, 1.0, rel_tol);
  const double s = 1.0 / (1.0 - eta);
  auto transformed = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double u = std::pow(v, s);
    // v^s underflows when s is large; the lost sliver carries negligible mass
    // and evaluating g there would poison the quadrature with inf * 0.
    if (u <= 0.0) return 0.0;
    return g(u) * s * std::pow(v, s - 1.0);
  };
  return integrate_adaptive(transformed, 0.0, 1.0, rel_tol);
}

double clamped_loglog(double x) {
  const double e = std::exp(1.0);
  return std::log(std::max(std::log(std::max(x, e)), e));
}

double kolmogorov_sf(double x) {
  if (x <= 0) return 1.0;
  double s = 0;
  for (int j = 1; j <= 128; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * s));
}

namespace {

double stephens_p(double d, double ne) {
  const double rn = std::sqrt(ne);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  KsResult r;
  r.statistic = d;
  r.n_effective = n;
  r.p_value = stephens_p(d, n);
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  d = std::max(d, std::abs(1.0 - static_cast<double>(j) / n2));
  d = std::max(d, std::abs(static_cast<double>(i) / n1 - 1.0));
  KsResult r;
  r.statistic = d;
  r.n_effective = n1 * n2 / (n1 + n2);
  r.p_value = stephens_p(d, r.n_effective);
  return r;
}

}  // namespace gpmlab
