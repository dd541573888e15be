#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpmlab/chain.hpp"
#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/kernel.hpp"
#include "gpmlab/limit_stats.hpp"
#include "gpmlab/numerics.hpp"

using namespace gpmlab;

namespace {

// Pareto(3/2) on [1, inf) shifted by its mean 3, so partial sums are centered.
StreamFactory centered_pareto_factory(std::uint64_t master_seed) {
  const StreamFactory raw = pareto_stream_factory(1.5, 1.0, false, master_seed);
  return [raw](std::uint64_t r) {
    ValueStream s = raw(r);
    return ValueStream([s]() mutable { return s() - 3.0; });
  };
}

}  // namespace

TEST_CASE("doubling map: indicator of the left half has sigma2 = 1/4") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(64);
  const DensityModel dens = invariant_density(map, grid);
  const KernelModel kernel = kernel_matrix(map, dens);

  Eigen::VectorXd f(grid.cells());
  for (int i = 0; i < f.size(); ++i) f[i] = grid.center(i) < 0.5 ? 1.0 : 0.0;

  const Sigma2Result res = sigma2_spectral(kernel, f, 32);
  CHECK(res.var0 == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(res.sigma2 == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(res.tail_estimate == 0.0);
  for (double c : res.correlations) CHECK(std::abs(c) < 1e-12);
}

TEST_CASE("sigma2_spectral rejects tiny horizons") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(32);
  const DensityModel dens = invariant_density(map, grid);
  const KernelModel kernel = kernel_matrix(map, dens);
  Eigen::VectorXd f = Eigen::VectorXd::Ones(grid.cells());
  CHECK_THROWS_AS(sigma2_spectral(kernel, f, 4), std::invalid_argument);
}

TEST_CASE("batch means recover the iid variance") {
  const StreamFactory g = gaussian_stream_factory(0.0, 1.0, 64);
  ValueStream s = g(0);
  std::vector<double> series;
  series.reserve(1 << 14);
  for (int i = 0; i < (1 << 14); ++i) series.push_back(s());
  CHECK(batch_means_sigma2(series) == doctest::Approx(1.0).epsilon(0.25));
  CHECK_THROWS_AS(batch_means_sigma2(std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST_CASE("lil ratios for iid gaussians stay under the theoretical constant") {
  const StreamFactory g = gaussian_stream_factory(0.0, 1.0, 12);
  const LilScanReport rep = lil_ratio_scan(g, 1.8, 12, 50);
  REQUIRE(rep.dyadic_n.size() == 13);
  CHECK(rep.dyadic_n.back() == 4096);
  CHECK(rep.a_theoretical == 1.8);
  CHECK(rep.fraction_below >= 0.8);
  CHECK(rep.ratio_mean.back() > 0.3);
  CHECK(rep.ratio_mean.back() < 1.0);
  CHECK(rep.ratio_q95.back() >= rep.ratio_mean.back());
}

TEST_CASE("slln ratios separate p = 1.2 from the borderline p = 2") {
  const StreamFactory g = gaussian_stream_factory(0.0, 1.0, 13);
  const SllnScanReport fast = slln_rate_scan(g, 1.2, 0.0, 14, 200);
  CHECK(fast.fraction_decreasing >= 0.85);
  CHECK(fast.ratio_mean.back() < fast.ratio_mean[fast.ratio_mean.size() - 4]);

  const SllnScanReport borderline = slln_rate_scan(g, 2.0, 0.0, 14, 200);
  CHECK(borderline.fraction_decreasing <= 0.6);
  CHECK(fast.last_mean < borderline.last_mean);

  CHECK_THROWS_AS(slln_rate_scan(g, 2.5, 0.0, 14, 10), std::invalid_argument);
  CHECK_THROWS_AS(slln_rate_scan(g, 1.5, -1.0, 14, 10), std::invalid_argument);
}

TEST_CASE("hill estimator recovers the pareto index") {
  const StreamFactory g = pareto_stream_factory(1.5, 1.0, false, 21);
  ValueStream s = g(0);
  std::vector<double> sample;
  sample.reserve(10000);
  for (int i = 0; i < 10000; ++i) sample.push_back(s());

  const HillEstimate est = hill_tail_index(sample, 0.05);
  CHECK(est.k == 500);
  CHECK(est.alpha == doctest::Approx(1.5).epsilon(0.1));
  CHECK(est.ci_lo <= 1.5);
  CHECK(est.ci_hi >= 1.5);
  CHECK(est.ci_lo < est.ci_hi);

  CHECK_THROWS_AS(hill_tail_index(sample, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(hill_tail_index(std::vector<double>(10, 1.0), 0.05), std::invalid_argument);
}

TEST_CASE("stable-law diagnostics flag heavy tails and clear gaussians") {
  SUBCASE("centered pareto sums look one-sided stable") {
    const StableLawReport rep = stable_law_diagnostics(centered_pareto_factory(555), 1.5, 1024, 4000);
    CHECK(rep.hill.alpha == doctest::Approx(1.5).epsilon(0.2));
    CHECK(rep.tail_ratio >= 3.0);
    CHECK(rep.right_count > rep.left_count);
    CHECK(rep.ks_gaussian.statistic > 0.03);
  }
  SUBCASE("gaussian sums pass the fitted-gaussian check") {
    const StreamFactory g = gaussian_stream_factory(0.0, 1.0, 77);
    const StableLawReport rep = stable_law_diagnostics(g, 2.0, 1 << 12, 4000);
    CHECK(rep.ks_gaussian.statistic < 0.03);
    CHECK(std::abs(rep.fitted_mean) < 0.05);
  }
  SUBCASE("too few replicas for the tail ranks") {
    CHECK_THROWS_AS(stable_law_diagnostics(centered_pareto_factory(1), 1.5, 64, 100),
                    std::invalid_argument);
  }
}

TEST_CASE("clt ks distance reacts to the variance normalization") {
  const StreamFactory g = gaussian_stream_factory(0.0, 1.0, 99);
  const KsResult good = clt_gaussian_ks(g, 1.0, 256, 4000);
  CHECK(good.statistic < 0.025);
  CHECK(good.p_value > 0.01);

  const KsResult bad = clt_gaussian_ks(g, 2.0, 256, 4000);
  CHECK(bad.statistic > 0.12);
  CHECK(bad.p_value < 1e-6);

  CHECK_THROWS_AS(clt_gaussian_ks(g, 0.0, 256, 10), std::invalid_argument);
}

TEST_CASE("kolmogorov survival function matches the series value") {
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.96394524366487509).epsilon(1e-9));
  CHECK(kolmogorov_sf(2.0) == doctest::Approx(2 * (std::exp(-8.0) - std::exp(-32.0))).epsilon(1e-6));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}
