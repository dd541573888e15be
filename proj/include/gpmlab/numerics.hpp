#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gpmlab {

// Ordinary least squares of log(y) on log(x), restricted to samples with
// x in [x_lo, x_hi] and y > floor. Used for decay-exponent estimates.
struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  double residual_rms = 0;
  std::size_t points = 0;
  bool valid = false;

  double eval(double x) const;  // fitted y at x
};

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                     double x_lo, double x_hi, double y_floor = 0.0);

// Convenience for sequences indexed 1..n (x_i = i).
LogLogFit fit_loglog_range(const std::vector<double>& values, std::size_t n_lo, std::size_t n_hi,
                           double y_floor = 0.0);

struct WilsonInterval {
  double lower = 0;
  double upper = 1;
  double point = 0;
};

// Wilson score interval for a binomial proportion; z defaults to two-sided 95%.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963985);

// Adaptive Simpson quadrature with relative tolerance. The integrand must be
// finite on (a,b); endpoint singularities are handled by the callers through
// explicit substitutions before reaching this routine.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-8, int max_depth = 48);

// Integral of g over (0,1] where g(u) ~ u^{-eta} as u -> 0 with eta < 1.
// Substitutes u = v^s with s = 1/(1-eta) so the transformed integrand is bounded.
double integrate_unit_singular(const std::function<double(double)>& g, double eta,
                               double rel_tol = 1e-8);

double clamped_loglog(double x);  // ln(ln(max(x,e) ) or e)): LL with double clamp

struct KsResult {
  double statistic = 0;
  double p_value = 1;
  double n_effective = 0;
};

// Survival function of the Kolmogorov distribution, 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_sf(double x);

// One-sample KS against a continuous CDF; p-value with the Stephens
// small-sample correction of the statistic.
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace gpmlab
