#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gpmlab/chain.hpp"
#include "gpmlab/numerics.hpp"
#include "gpmlab/observables.hpp"

namespace gpmlab {

// Lag sequence entering the bounds; callers wrap an AlphaSequence::value or
// inject a synthetic sequence.  Must be nonincreasing with values in [0,1].
using AlphaFn = std::function<double(int)>;

double bennett_h(double u);  // (1+u) ln(1+u) - u

// R(u) = (min{q >= 0 : alpha2(q) <= u} ^ n) Q(u) together with its
// generalized inverse S(v) = inf{u : R(u) <= v}.  R is nonincreasing and S is
// computed so that R(S(v)) <= v always holds.
class RsPair {
 public:
  RsPair(const TailSpec& tail, AlphaFn alpha2, int n);

  double R(double u) const;
  double S(double v) const;

 private:
  const TailSpec* tail_;
  AlphaFn alpha2_;
  int n_;
};

// 4 n sum_{i<n} integral of Q^2 over (0, alpha1(i)]: the smallest admissible
// s_n^2 for the maximal inequality.
double s2_floor(const TailSpec& tail, const AlphaFn& alpha1, int n);

struct FnBound {
  double exponential = 0;  // 4 exp(-(r^2 s^2 / 8x^2) h(2x^2/(r s^2)))
  double algebraic = 0;    // 4 (1 + 2x^2/(r s^2))^{-r/8}
  double integral_term = 0;
  double total = 0;            // exponential + integral_term
  double total_algebraic = 0;  // algebraic + integral_term
  double s2_required = 0;
  double s_of_x_over_r = 0;
};

// Right-hand side of the maximal inequality
//   P(sup_{k<=n} |S_k| >= 5x) <= 4 exp(...) + n (6/x + 16x/(r s^2)) int_0^{S(x/r)} Q,
// valid when s^2 >= s2_floor.  Throws when the s^2 contract is violated.
FnBound fn_maximal_bound(const TailSpec& tail, const AlphaFn& alpha1, const AlphaFn& alpha2,
                         int n, double x, double r, double s2);

struct BestFnBound {
  double value = 0;
  double r = 1;
  FnBound detail;
};

// fn_maximal_bound minimized over r in {1, 2, 4, ..., 8 LL n}.
BestFnBound best_fn_bound(const TailSpec& tail, const AlphaFn& alpha1, const AlphaFn& alpha2,
                          int n, double x, double s2);

struct DominationPoint {
  double x = 0;
  double mc_probability = 0;
  double wilson_upper = 1;
  double bound = 0;
  double r_used = 1;
  bool pass = false;
};

struct DominationReport {
  std::vector<DominationPoint> points;
  std::size_t replicas = 0;
  bool all_pass = false;
};

// Monte-Carlo check that P(sup_k |S_k| >= 5x) stays below the maximal bound
// at every x in x_grid; the left side is the Wilson 95% upper limit over
// chain replicas, the right side is minimized over r with s^2 = s2_floor.
DominationReport domination_test_fn(const GpmMap& map, const DensityModel& density,
                                    const ObservableSpec& f, const TailSpec& tail,
                                    const AlphaFn& alpha1, const AlphaFn& alpha2, int n,
                                    const std::vector<double>& x_grid, std::size_t replicas,
                                    std::uint64_t seed);

struct LilConstant {
  double a_chain = 0;  // 20 (sum_{k>=0} int Q^2)^{1/2}
  double a_map = 0;    // 40 sqrt(2) (sum_{k>=1} int Q^2)^{1/2}
  double term0 = 0;
  double series_from1 = 0;
  double tail_estimate = 0;  // truncation bound from the fitted term decay
  double tail_relative = 0;  // tail against the summed series
  LogLogFit fit;
};

// Explicit LIL constants from the alpha1 sequence and the quantile envelope;
// throws when the term decay is not summable.
LilConstant lil_constant(const TailSpec& tail, const AlphaFn& alpha1, int k_max);

double pinelis_bound(double c, double y, double x);

struct PinelisTest {
  double bound = 0;
  double mc_probability = 0;
  double wilson_upper = 1;
  std::size_t hits = 0;
  bool pass = false;
};

// P(sup_j |M_j| >= x) for the +-c coin-flip martingale of n steps (so the
// predictable quadratic variation is exactly n c^2 = y), against the bound.
PinelisTest pinelis_martingale_test(double c, std::size_t n, double x, std::size_t replicas,
                                    std::uint64_t seed);

// 4 int_0^{alpha1(i)} Q^2: covariance envelope at lag i.
double rio_covariance_bound(const TailSpec& tail, const AlphaFn& alpha1, int lag);

struct SllnSeriesBound {
  double series_value = 0;  // sum_i ((i+1)^{p-1} - i^{p-1}) int_0^{alpha1(i)} Q^p
  double proxy_value = 0;   // int_0^1 u^{-g(p-1)/(1-g)} Q^p(u) du
  bool series_finite = false;
  bool proxy_finite = false;
  double tail_estimate = 0;
  LogLogFit fit;
};

// The rate-of-convergence series in its Abel-summed form plus the reduced
// integral proxy; the proxy's finiteness verdict is decided by the same
// exponent algebra as check_condition and must agree with it.
SllnSeriesBound slln_series_bound(const TailSpec& tail, const AlphaFn& alpha1, double p,
                                  double gamma, int k_max);

}  // namespace gpmlab
