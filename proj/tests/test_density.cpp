#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/numerics.hpp"

using namespace gpmlab;

TEST_CASE("ulam rows are stochastic and the doubling map keeps Lebesgue measure") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(64);
  const UlamResult ulam = ulam_matrix(map, grid);
  CHECK(ulam.max_row_defect < 1e-12);

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.cells());
  Eigen::VectorXd row_sums = ulam.L * ones;
  for (int i = 0; i < grid.cells(); ++i) CHECK(row_sums[i] == doctest::Approx(1.0).epsilon(1e-12));

  const DensityModel dens = invariant_density(map, grid);
  for (int i = 0; i < grid.cells(); ++i) {
    CHECK(dens.mass(i) == doctest::Approx(1.0 / 64).epsilon(1e-8));
    CHECK(dens.density(i) == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(dens.nu().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dens.nu_interval(0.25, 0.75) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("stationary vector is a fixed point of the transfer matrix") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 256);
  const UlamResult ulam = ulam_matrix(map, grid);
  const DensityModel dens = invariant_density(map, grid);

  Eigen::VectorXd image = ulam.L.transpose() * dens.nu();
  for (int i = 0; i < grid.cells(); ++i)
    CHECK(image[i] == doctest::Approx(dens.nu()[i]).epsilon(1e-7).scale(1.0));
  for (int i = 0; i < grid.cells(); ++i) CHECK(dens.mass(i) > 0);
}

TEST_CASE("intermittent density diverges like x^(-gamma) near the fixed point") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 512);
  const DensityModel dens = invariant_density(map, grid);

  std::vector<double> xs, ys;
  for (int i = 0; i <= 120; ++i) {
    const double x = 1e-3 * std::pow(50.0, i / 120.0);
    xs.push_back(x);
    ys.push_back(dens.interp_h(x));
  }
  const LogLogFit fit = fit_loglog(xs, ys, 0.0, 1.0);
  REQUIRE(fit.valid);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.25));
  CHECK(dens.splice_coeff() > 0);
}

TEST_CASE("pullback series reproduces the density left of z1") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 512);
  const DensityModel dens = invariant_density(map, grid);
  const double z1 = map.inverse_branch(0, map.z0());

  const SeriesExtension ext = density_series_extension(map, dens, 32);
  REQUIRE(!ext.x.empty());
  REQUIRE(ext.tail_rel.size() == ext.x.size());
  std::size_t compared = 0;
  for (std::size_t i = 0; i < ext.x.size(); ++i) {
    if (ext.x[i] < 0.5 * z1 || ext.x[i] > z1) continue;
    ++compared;
    CHECK(ext.tail_rel[i] < 0.05);
    const double rel = std::abs(ext.value[i] - dens.interp_h(ext.x[i])) / dens.interp_h(ext.x[i]);
    CHECK(rel < 0.10);
  }
  CHECK(compared > 5);
}

TEST_CASE("h(z_n) z_n^gamma stays within a constant band") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 512);
  const DensityModel dens = invariant_density(map, grid);
  const ZSequence z = z_sequence(map, 16);

  double lo = 1e300, hi = 0;
  for (std::size_t n = 4; n <= 12; ++n) {
    const double v = dens.interp_h(z.values[n]) * std::pow(z.values[n], 0.5);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("variation norm counts interior jumps and both endpoints") {
  Eigen::VectorXd step(4);
  step << 0, 0, 1, 1;
  CHECK(variation_norm(step) == doctest::Approx(2.0));  // one jump up, drop at 1

  Eigen::VectorXd spike(5);
  spike << 0, 0, 3, 0, 0;
  CHECK(variation_norm(spike) == doctest::Approx(6.0));

  Eigen::VectorXd monotone(4);
  monotone << 1, 2, 3, 4;
  CHECK(variation_norm(monotone) == doctest::Approx(1.0 + 3.0 + 4.0));
}

TEST_CASE("power iteration reports failure to converge") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 64);
  PowerIterationOptions opts;
  opts.max_iterations = 2;
  opts.abs_tol = 1e-300;
  opts.rel_tol = 1e-300;
  CHECK_THROWS_AS(invariant_density(map, grid, opts), std::runtime_error);
}
