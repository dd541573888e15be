#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/kernel.hpp"
#include "gpmlab/observables.hpp"
#include "gpmlab/rng.hpp"

using namespace gpmlab;

namespace {

KernelModel lsv_kernel(double gamma, int cells) {
  const GpmMap map = GpmMap::lsv(gamma);
  const Grid grid = make_graded_grid(map, cells);
  const DensityModel dens = invariant_density(map, grid);
  return kernel_matrix(map, dens);
}

}  // namespace

TEST_CASE("doubling kernel has the closed form P[j][j/2] = P[j][j/2+16] = 1/2") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(32);
  const DensityModel dens = invariant_density(map, grid);
  const KernelModel kernel = kernel_matrix(map, dens);

  Eigen::MatrixXd P = Eigen::MatrixXd(kernel.P());
  for (int j = 0; j < 32; ++j) {
    for (int i = 0; i < 32; ++i) {
      const double expected = (i == j / 2 || i == j / 2 + 16) ? 0.5 : 0.0;
      CHECK(P(j, i) == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
    }
  }
  CHECK(kernel.max_renorm_defect() < 1e-9);
}

TEST_CASE("kernel fixes constants and preserves the stationary vector") {
  const KernelModel kernel = lsv_kernel(0.5, 256);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(kernel.cells());
  const Eigen::VectorXd k1 = kernel.apply(ones);
  for (int i = 0; i < kernel.cells(); ++i) CHECK(k1[i] == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::VectorXd left = kernel.P().transpose() * kernel.nu();
  for (int i = 0; i < kernel.cells(); ++i)
    CHECK(left[i] == doctest::Approx(kernel.nu()[i]).epsilon(1e-6).scale(1e-9));
}

TEST_CASE("reversal duality holds against the transfer matrix") {
  const GpmMap map = GpmMap::lsv(0.25);
  const Grid grid = make_graded_grid(map, 256);
  const DensityModel dens = invariant_density(map, grid);
  const UlamResult ulam = ulam_matrix(map, grid);
  const KernelModel kernel = kernel_matrix(map, dens);

  Rng rng(42);
  for (int probe = 0; probe < 20; ++probe) {
    Eigen::VectorXd f(kernel.cells()), g(kernel.cells());
    for (int i = 0; i < kernel.cells(); ++i) {
      f[i] = 2 * rng.uniform() - 1;
      g[i] = 2 * rng.uniform() - 1;
    }
    const double lhs = kernel.nu().dot(kernel.apply(f).cwiseProduct(g).eval());
    const double rhs = kernel.nu().dot(f.cwiseProduct((ulam.L * g).eval()).eval());
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("masked pieces reassemble the kernel power exactly") {
  const KernelModel kernel = lsv_kernel(0.5, 128);
  MaskedOperators ops(kernel, 12);

  Rng rng(7);
  Eigen::MatrixXd F(kernel.cells(), 4);
  for (int j = 0; j < F.cols(); ++j)
    for (int i = 0; i < F.rows(); ++i) F(i, j) = 2 * rng.uniform() - 1;

  for (const auto& rep : ops.check_decomposition(F, 12)) CHECK(rep.max_abs_error < 1e-10);
  for (const auto& rep : ops.check_renewal(F, 12)) CHECK(rep.max_abs_error < 1e-10);
}

TEST_CASE("independent kernel has vanishing dependence coefficients") {
  // rows all equal to nu: the chain forgets its state in one step
  const Grid grid = uniform_grid(16);
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(16, 1.0 / 16);
  SparseRowMatrix P(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) P.insert(i, j) = nu[j];
  P.makeCompressed();
  const KernelModel kernel(grid, P, nu, 0.25, 0.125);

  AlphaOptions opts;
  opts.n_max = 8;
  const AlphaSequence a1 = alpha_estimate(kernel, 1, opts);
  const AlphaSequence a2 = alpha_estimate(kernel, 2, opts);
  for (int n = 1; n <= 8; ++n) {
    CHECK(a1.values[static_cast<std::size_t>(n)] < 1e-12);
    CHECK(a2.values[static_cast<std::size_t>(n)] < 1e-12);
  }
  CHECK(a1.values[0] > 0.1);  // lag zero keeps the marginal spread
}

TEST_CASE("dependence coefficients are monotone and ordered by their order") {
  const KernelModel kernel = lsv_kernel(0.5, 256);
  AlphaOptions opts;
  opts.n_max = 32;
  const AlphaSequence a1 = alpha_estimate(kernel, 1, opts);
  const AlphaSequence a2 = alpha_estimate(kernel, 2, opts);

  REQUIRE(a1.values.size() == 33);
  for (std::size_t n = 1; n < a1.values.size(); ++n)
    CHECK(a1.values[n] <= a1.values[n - 1] + 1e-15);
  for (std::size_t n = 0; n < a2.values.size(); ++n) {
    CHECK(a2.values[n] >= a1.values[n] - 1e-12);
    CHECK(a2.values[n] <= 0.5 + 1e-12);
  }
  CHECK(a1.values[1] > 1e-4);
  // extension continues the fitted decay instead of freezing the last value
  CHECK(a1.value(64) <= a1.values.back());
  CHECK(a1.value(32) == a1.values.back());
}

TEST_CASE("remainder after the rank-one projection decays") {
  const KernelModel kernel = lsv_kernel(0.5, 256);
  const int right = [&] {
    for (int i = 0; i < kernel.cells(); ++i)
      if (std::abs(kernel.grid().right(i) - 0.5) < 1e-12) return i;
    return -1;
  }();
  REQUIRE(right >= 0);
  const Eigen::VectorXd f = kernel.centered_indicator(right);
  CHECK(std::abs(kernel.nu_mean(f)) < 1e-12);

  const EnReport rep = en_remainder(kernel, f, 32);
  REQUIRE(rep.var.size() == 32);
  for (double v : rep.var) CHECK(v >= 0);
  CHECK(rep.var[31] < rep.var[0]);
  REQUIRE(rep.fit.valid);
  CHECK(rep.fit.slope < -0.5);
}

TEST_CASE("variation of kernel iterates stays bounded") {
  const KernelModel kernel = lsv_kernel(0.5, 256);
  Eigen::VectorXd f(kernel.cells());
  for (int i = 0; i < kernel.cells(); ++i) f[i] = (kernel.grid().center(i) <= 0.5) ? 1.0 : 0.0;

  const VariationBoundResult res = variation_bound_check(kernel, f, 16);
  CHECK(res.max_ratio < 10.0);
  CHECK_FALSE(res.trending_up);
}

TEST_CASE("correlations of the half-interval indicator decay at the mixing rate") {
  const KernelModel kernel = lsv_kernel(0.5, 512);
  Eigen::VectorXd f(kernel.cells());
  for (int i = 0; i < kernel.cells(); ++i) f[i] = (kernel.grid().center(i) <= 0.5) ? 1.0 : 0.0;

  const CorrelationResult corr = correlation_sequence(kernel, f, f, 64);
  REQUIRE(corr.values.size() == 64);
  CHECK(std::abs(corr.values[0]) > std::abs(corr.values[40]));
  REQUIRE(corr.fit.valid);
  CHECK(corr.fit.slope == doctest::Approx(-1.0).epsilon(0.45));
}
