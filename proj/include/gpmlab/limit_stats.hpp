#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "gpmlab/chain.hpp"
#include "gpmlab/kernel.hpp"
#include "gpmlab/numerics.hpp"

namespace gpmlab {

struct Sigma2Result {
  double sigma2 = 0;          // clamped at zero
  double sigma2_raw = 0;      // partial sum plus tail estimate, sign kept
  double var0 = 0;            // nu(f0^2)
  std::vector<double> correlations;  // nu(K^k f0 . f), k = 1..k_max
  double tail_estimate = 0;   // bound on twice the truncated remainder
  LogLogFit fit;              // decay of |correlations| over the tail window
};

// sigma^2 = nu(f0^2) + 2 sum_{k>=1} nu(K^k f0 . f) with f0 = f - nu(f),
// truncated at k_max; the remainder is estimated from the fitted decay of the
// correlation tail.  Throws when the tail shows no summable decay.
Sigma2Result sigma2_spectral(const KernelModel& kernel, const Eigen::VectorXd& f, int k_max);

// Batch-means variance estimate from a single centered series: sqrt(n)-length
// batches, sigma^2 ~ len * Var(batch means).
double batch_means_sigma2(const std::vector<double>& centered);

struct LilScanReport {
  std::vector<std::size_t> dyadic_n;
  std::vector<double> ratio_mean;   // across replicas, per dyadic n
  std::vector<double> ratio_q95;
  std::vector<double> replica_max;  // per replica, max over dyadic n
  double a_theoretical = 0;
  std::size_t below_count = 0;
  double fraction_below = 0;
};

// Ratios max_{k<=n} |S_k| / sqrt(2 n LL n) at dyadic n, LL double-clamped.
// The factory must emit centered values.
LilScanReport lil_ratio_scan(const StreamFactory& factory, double a_theoretical, int n_max_log2,
                             std::size_t replicas);

struct SllnScanReport {
  std::vector<std::size_t> dyadic_n;
  std::vector<double> ratio_mean;
  std::vector<double> ratio_q95;
  std::vector<double> replica_last;  // final-n ratio per replica
  double p = 2, b = 0;
  std::size_t decreasing_count = 0;  // net decrease across the last three doublings
  double fraction_decreasing = 0;
  double last_mean = 0;
};

// Ratios max_{k<=n} |S_k| / (n^{1/p} (ln n)^b) at dyadic n; the per-replica
// trend over the last three doublings is the almost-sure-convergence proxy.
// A replica counts as decreasing when its final ratio sits below the ratio
// three doublings earlier: the running max ratchets upward whenever a new
// record arrives, so demanding a strict per-doubling descent would reject
// even a path that converges at the theoretical rate.
SllnScanReport slln_rate_scan(const StreamFactory& factory, double p, double b, int n_max_log2,
                              std::size_t replicas);

struct HillEstimate {
  double alpha = 0;  // tail index
  double ci_lo = 0, ci_hi = 0;
  std::size_t k = 0;  // upper order statistics used
};

// Hill estimator on the top `fraction` order statistics, percentile CI from
// `bootstrap` resamples.  Requires a strictly positive tail beyond rank k.
HillEstimate hill_tail_index(const std::vector<double>& sample, double fraction,
                             int bootstrap = 200, std::uint64_t seed = 0x5eedULL);

struct StableLawReport {
  std::vector<double> w;  // normalized partial sums, one per replica
  HillEstimate hill;
  double threshold = 0;  // 99% quantile of |W|
  std::size_t left_count = 0, right_count = 0;
  double tail_ratio = 0;  // right-tail mass over left-tail mass beyond threshold
  double fitted_mean = 0, fitted_sd = 1;  // median and IQR-based scale of W
  KsResult ks_gaussian;  // distance to the fitted Gaussian (the p = 2 check)
};

// W_r = S_n / n^{1/p} per replica (S_n / sqrt(n ln n) when p = 2); Hill index
// of the right tail at the top 5%, and the one-sidedness diagnostic beyond
// the 99% two-sided quantile.  Needs at least 200 upper order statistics.
StableLawReport stable_law_diagnostics(const StreamFactory& factory, double p, std::size_t n,
                                       std::size_t replicas, std::uint64_t boot_seed = 0x5eedULL);

// KS distance of S_n / (sigma sqrt(n)) to the standard Gaussian.
KsResult clt_gaussian_ks(const StreamFactory& factory, double sigma, std::size_t n,
                         std::size_t replicas);

double normal_cdf(double x);

}  // namespace gpmlab
