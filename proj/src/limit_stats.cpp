#include "gpmlab/limit_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gpmlab/rng.hpp"

namespace gpmlab {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

double column_quantile(const std::vector<std::vector<double>>& curves, std::size_t col, double q) {
  std::vector<double> vals;
  vals.reserve(curves.size());
  for (const auto& c : curves) vals.push_back(c[col]);
  std::sort(vals.begin(), vals.end());
  return quantile_sorted(vals, q);
}

// Per replica, max_{k<=n} |S_k| / normalizer(n) sampled at n = 2^j.
std::vector<std::vector<double>> dyadic_ratio_curves(const StreamFactory& factory,
                                                     int n_max_log2, std::size_t replicas,
                                                     const std::function<double(double)>& norm,
                                                     std::vector<std::size_t>& dyadic_n) {
  if (n_max_log2 < 1 || n_max_log2 > 62) throw std::invalid_argument("dyadic scan: bad n_max_log2");
  dyadic_n.clear();
  for (int j = 0; j <= n_max_log2; ++j) dyadic_n.push_back(std::size_t{1} << j);

  std::vector<std::vector<double>> curves(replicas);
  const std::size_t n_total = dyadic_n.back();
  for (std::size_t r = 0; r < replicas; ++r) {
    ValueStream stream = factory(r);
    double s = 0, running_max = 0;
    std::size_t next_idx = 0;
    auto& row = curves[r];
    row.reserve(dyadic_n.size());
    for (std::size_t i = 1; i <= n_total; ++i) {
      s += stream();
      running_max = std::max(running_max, std::abs(s));
      if (i == dyadic_n[next_idx]) {
        row.push_back(running_max / norm(static_cast<double>(i)));
        ++next_idx;
      }
    }
  }
  return curves;
}

}  // namespace

Sigma2Result sigma2_spectral(const KernelModel& kernel, const Eigen::VectorXd& f, int k_max) {
  if (k_max < 8) throw std::invalid_argument("sigma2_spectral: k_max >= 8");
  Sigma2Result out;
  Eigen::VectorXd f0 = f.array() - kernel.nu_mean(f);
  out.var0 = kernel.nu_mean(f0.cwiseProduct(f0));

  Eigen::VectorXd u = f0;
  out.correlations.reserve(static_cast<std::size_t>(k_max));
  double partial = out.var0;
  for (int k = 1; k <= k_max; ++k) {
    u = kernel.apply(u);
    const double c = kernel.nu_mean(u.cwiseProduct(f0));
    out.correlations.push_back(c);
    partial += 2 * c;
  }

  std::vector<double> mags(out.correlations.size());
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(out.correlations[i]);
  const std::size_t lo = static_cast<std::size_t>(k_max) / 2;
  double window_max = 0;
  for (std::size_t i = lo - 1; i < mags.size(); ++i) window_max = std::max(window_max, mags[i]);

  const double scale = std::max(1.0, out.var0);
  if (window_max < 1e-13 * scale) {
    out.tail_estimate = 0;
  } else {
    out.fit = fit_loglog_range(mags, lo, static_cast<std::size_t>(k_max), 1e-15 * scale);
    if (!out.fit.valid || out.fit.slope > -1.02) {
      throw std::runtime_error(
          "sigma2_spectral: correlation tail shows no summable decay (fitted exponent " +
          std::to_string(out.fit.valid ? out.fit.slope : 0.0) + "); increase k_max or the grid");
    }
    const double t_last = out.fit.eval(static_cast<double>(k_max));
    out.tail_estimate = 2 * t_last * static_cast<double>(k_max) / (-out.fit.slope - 1);
  }

  out.sigma2_raw = partial;
  out.sigma2 = std::max(0.0, partial);
  return out;
}

double batch_means_sigma2(const std::vector<double>& centered) {
  const std::size_t n = centered.size();
  if (n < 16) throw std::invalid_argument("batch_means_sigma2: series too short");
  const std::size_t len = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t m = n / len;
  std::vector<double> means(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0;
    for (std::size_t i = j * len; i < (j + 1) * len; ++i) s += centered[i];
    means[j] = s / static_cast<double>(len);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double var = 0;
  for (double v : means) var += (v - grand) * (v - grand);
  var /= static_cast<double>(m - 1);
  return static_cast<double>(len) * var;
}

LilScanReport lil_ratio_scan(const StreamFactory& factory, double a_theoretical, int n_max_log2,
                             std::size_t replicas) {
  if (replicas == 0) throw std::invalid_argument("lil_ratio_scan: replicas >= 1");
  LilScanReport rep;
  rep.a_theoretical = a_theoretical;
  auto norm = [](double n) { return std::sqrt(2.0 * n * clamped_loglog(n)); };
  auto curves = dyadic_ratio_curves(factory, n_max_log2, replicas, norm, rep.dyadic_n);

  const std::size_t cols = rep.dyadic_n.size();
  rep.ratio_mean.assign(cols, 0.0);
  rep.ratio_q95.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0;
    for (const auto& row : curves) s += row[c];
    rep.ratio_mean[c] = s / static_cast<double>(replicas);
    rep.ratio_q95[c] = column_quantile(curves, c, 0.95);
  }
  rep.replica_max.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    rep.replica_max[r] = *std::max_element(curves[r].begin(), curves[r].end());
    if (rep.replica_max[r] < a_theoretical) ++rep.below_count;
  }
  rep.fraction_below = static_cast<double>(rep.below_count) / static_cast<double>(replicas);
  return rep;
}

SllnScanReport slln_rate_scan(const StreamFactory& factory, double p, double b, int n_max_log2,
                              std::size_t replicas) {
  if (!(p > 1) || p > 2) throw std::invalid_argument("slln_rate_scan: p in (1,2]");
  if (b < 0) throw std::invalid_argument("slln_rate_scan: b >= 0");
  if (replicas == 0) throw std::invalid_argument("slln_rate_scan: replicas >= 1");
  if (n_max_log2 < 4) throw std::invalid_argument("slln_rate_scan: need at least 4 doublings");

  SllnScanReport rep;
  rep.p = p;
  rep.b = b;
  auto norm = [p, b](double n) {
    const double ln = std::log(std::max(n, std::exp(1.0)));
    return std::pow(n, 1.0 / p) * std::pow(ln, b);
  };
  auto curves = dyadic_ratio_curves(factory, n_max_log2, replicas, norm, rep.dyadic_n);

  const std::size_t cols = rep.dyadic_n.size();
  rep.ratio_mean.assign(cols, 0.0);
  rep.ratio_q95.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0;
    for (const auto& row : curves) s += row[c];
    rep.ratio_mean[c] = s / static_cast<double>(replicas);
    rep.ratio_q95[c] = column_quantile(curves, c, 0.95);
  }
  rep.replica_last.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& row = curves[r];
    rep.replica_last[r] = row.back();
    const std::size_t m = row.size();
    if (row[m - 4] > row[m - 1]) ++rep.decreasing_count;
  }
  rep.fraction_decreasing = static_cast<double>(rep.decreasing_count) / static_cast<double>(replicas);
  rep.last_mean = std::accumulate(rep.replica_last.begin(), rep.replica_last.end(), 0.0) /
                  static_cast<double>(replicas);
  return rep;
}

namespace {

double hill_point(const std::vector<double>& desc_sorted, std::size_t k) {
  const double x_ref = desc_sorted[k];
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(desc_sorted[i] / x_ref);
  return static_cast<double>(k) / s;
}

}  // namespace

HillEstimate hill_tail_index(const std::vector<double>& sample, double fraction, int bootstrap,
                             std::uint64_t seed) {
  if (!(fraction > 0) || fraction >= 0.5) throw std::invalid_argument("hill: fraction in (0,0.5)");
  const std::size_t m = sample.size();
  const std::size_t k = static_cast<std::size_t>(fraction * static_cast<double>(m));
  if (k < 2 || k + 1 > m) throw std::invalid_argument("hill: too few upper order statistics");

  std::vector<double> desc = sample;
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  if (!(desc[k] > 0)) throw std::invalid_argument("hill: tail reaches nonpositive values");

  HillEstimate est;
  est.k = k;
  est.alpha = hill_point(desc, k);

  if (bootstrap > 0) {
    Rng rng(seed);
    std::vector<double> alphas;
    alphas.reserve(static_cast<std::size_t>(bootstrap));
    std::vector<double> resample(m);
    for (int b = 0; b < bootstrap; ++b) {
      for (std::size_t i = 0; i < m; ++i)
        resample[i] = sample[static_cast<std::size_t>(rng.uniform() * static_cast<double>(m))];
      std::sort(resample.begin(), resample.end(), std::greater<double>());
      if (resample[k] > 0) alphas.push_back(hill_point(resample, k));
    }
    std::sort(alphas.begin(), alphas.end());
    est.ci_lo = quantile_sorted(alphas, 0.025);
    est.ci_hi = quantile_sorted(alphas, 0.975);
  } else {
    est.ci_lo = est.ci_hi = est.alpha;
  }
  return est;
}

StableLawReport stable_law_diagnostics(const StreamFactory& factory, double p, std::size_t n,
                                       std::size_t replicas, std::uint64_t boot_seed) {
  if (!(p > 1) || p > 2) throw std::invalid_argument("stable diagnostics: p in (1,2]");
  if (n == 0) throw std::invalid_argument("stable diagnostics: n >= 1");
  const std::size_t k_upper = static_cast<std::size_t>(0.05 * static_cast<double>(replicas));
  if (k_upper < 200)
    throw std::invalid_argument("stable diagnostics: fewer than 200 upper order statistics");

  const bool lognorm = p >= 2;
  const double ln_n = std::log(std::max(static_cast<double>(n), std::exp(1.0)));
  const double norm =
      lognorm ? std::sqrt(static_cast<double>(n) * ln_n) : std::pow(static_cast<double>(n), 1.0 / p);

  StableLawReport rep;
  rep.w = run_replicas(
      factory, replicas, [n, norm](ValueStream& stream) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += stream();
        return s / norm;
      });

  rep.hill = hill_tail_index(rep.w, 0.05, 200, boot_seed);

  std::vector<double> abs_w(rep.w.size());
  for (std::size_t i = 0; i < rep.w.size(); ++i) abs_w[i] = std::abs(rep.w[i]);
  std::sort(abs_w.begin(), abs_w.end());
  rep.threshold = quantile_sorted(abs_w, 0.99);
  for (double v : rep.w) {
    if (v > rep.threshold) ++rep.right_count;
    if (v < -rep.threshold) ++rep.left_count;
  }
  rep.tail_ratio = static_cast<double>(rep.right_count) /
                   std::max(1.0, static_cast<double>(rep.left_count));

  // Sample moments are the wrong scale estimator here: at tail index 2 the
  // sample variance is carried by the few largest excursions and keeps
  // growing with the replica count, so a moment fit overstates the scale of
  // the gaussian body.  Fit location and scale from quantiles instead;
  // 1.34898 is the interquartile range of the standard normal.
  std::vector<double> sorted_w = rep.w;
  std::sort(sorted_w.begin(), sorted_w.end());
  rep.fitted_mean = quantile_sorted(sorted_w, 0.5);
  rep.fitted_sd =
      (quantile_sorted(sorted_w, 0.75) - quantile_sorted(sorted_w, 0.25)) / 1.3489795003921634;
  const double mu = rep.fitted_mean, sd = rep.fitted_sd;
  rep.ks_gaussian = ks_one_sample(rep.w, [mu, sd](double x) { return normal_cdf((x - mu) / sd); });
  return rep;
}

KsResult clt_gaussian_ks(const StreamFactory& factory, double sigma, std::size_t n,
                         std::size_t replicas) {
  if (!(sigma > 0)) throw std::invalid_argument("clt ks: sigma > 0");
  const double norm = sigma * std::sqrt(static_cast<double>(n));
  std::vector<double> w = run_replicas(
      factory, replicas, [n, norm](ValueStream& stream) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += stream();
        return s / norm;
      });
  return ks_one_sample(std::move(w), [](double x) { return normal_cdf(x); });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace gpmlab
