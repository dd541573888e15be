#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpmlab/bounds.hpp"
#include "gpmlab/observables.hpp"

using namespace gpmlab;

namespace {

const AlphaFn kInverseQ = [](int q) { return q == 0 ? 1.0 : 1.0 / q; };
const AlphaFn kInverseSquare = [](int i) { return 1.0 / ((i + 1.0) * (i + 1.0)); };
const AlphaFn kInverseCube = [](int i) { return std::pow(i + 1.0, -3.0); };
const AlphaFn kGeometric = [](int k) { return std::pow(2.0, -k); };

}  // namespace

TEST_CASE("bennett function at landmark points") {
  CHECK(bennett_h(0.0) == 0.0);
  CHECK(bennett_h(1.0) == doctest::Approx(0.38629436111989062).epsilon(1e-14));
  CHECK(bennett_h(0.5) == doctest::Approx(1.5 * std::log(1.5) - 0.5).epsilon(1e-14));
  CHECK(bennett_h(2.0) > 2 * bennett_h(1.0));
}

TEST_CASE("R and S envelopes for a power tail with alpha2(q) = 1/q") {
  const TailSpec tail = TailSpec::power(1.0, 4.0);
  const RsPair rs(tail, kInverseQ, 100);

  CHECK(rs.R(0.1) == doctest::Approx(17.782794100389228).epsilon(1e-10));
  CHECK(rs.R(0.01) == doctest::Approx(316.22776601683796).epsilon(1e-10));
  CHECK(rs.R(1.0) == 0.0);

  const RsPair clamped(tail, kInverseQ, 50);
  CHECK(clamped.R(0.01) == doctest::Approx(158.11388300841898).epsilon(1e-10));

  for (double u = 0.02; u < 1.0; u += 0.07) CHECK(rs.R(u) >= rs.R(u + 0.07) - 1e-12);
  for (double w : {0.01, 0.1, 0.5, 2.0, 10.0}) {
    const double s = rs.S(w);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(rs.R(s) <= w + 1e-9);
  }

  CHECK_THROWS_AS(RsPair(tail, kInverseQ, 0), std::invalid_argument);
}

TEST_CASE("s2 floor closed form for a unit cutoff tail") {
  const TailSpec tail = TailSpec::cutoff(1.0, 1.0);
  const double floor4 = s2_floor(tail, kInverseSquare, 4);
  CHECK(floor4 == doctest::Approx(22.777777777777779).epsilon(1e-12));
  CHECK(s2_floor(tail, kInverseSquare, 8) > floor4);
}

TEST_CASE("maximal inequality bound: structure and contracts") {
  const TailSpec tail = TailSpec::power(1.0, 4.0);
  const int n = 200;
  const double s2 = 1.5 * s2_floor(tail, kInverseSquare, n);

  SUBCASE("the s2 contract is enforced") {
    const double low = 0.9 * s2_floor(tail, kInverseSquare, n);
    CHECK_THROWS_AS(fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, 1.0, 2.0, low),
                    std::domain_error);
    CHECK_THROWS_AS(fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, -1.0, 2.0, s2),
                    std::invalid_argument);
  }

  SUBCASE("exponential piece never exceeds the algebraic one") {
    for (double x : {0.3, 1.0, 3.0, 10.0}) {
      for (double r : {1.0, 2.0, 8.0}) {
        const FnBound b = fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, x * std::sqrt(s2),
                                           r, s2);
        CHECK(b.exponential <= b.algebraic + 1e-15);
        CHECK(b.total == doctest::Approx(b.exponential + b.integral_term).epsilon(1e-12));
        CHECK(b.total_algebraic == doctest::Approx(b.algebraic + b.integral_term).epsilon(1e-12));
        CHECK(b.integral_term >= 0.0);
      }
    }
  }

  SUBCASE("tail pieces decrease in x, the whole bound grows with n") {
    double prev_exp = 1e300, prev_alg = 1e300, prev_s = 1e300;
    for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const FnBound b = fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, x * std::sqrt(s2),
                                         4.0, s2);
      CHECK(b.exponential <= prev_exp + 1e-15);
      CHECK(b.algebraic <= prev_alg + 1e-15);
      CHECK(b.s_of_x_over_r <= prev_s + 1e-15);
      prev_exp = b.exponential;
      prev_alg = b.algebraic;
      prev_s = b.s_of_x_over_r;
    }
    const double s2_wide = 1.5 * s2_floor(tail, kInverseSquare, 4 * n);
    const double x = 2 * std::sqrt(s2_wide);
    const FnBound small = fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, x, 4.0, s2_wide);
    const FnBound large = fn_maximal_bound(tail, kInverseSquare, kInverseQ, 4 * n, x, 4.0, s2_wide);
    CHECK(large.total >= small.total - 1e-15);
  }

  SUBCASE("best_fn_bound never loses to a fixed r") {
    const double x = 2 * std::sqrt(s2);
    const BestFnBound best = best_fn_bound(tail, kInverseSquare, kInverseQ, n, x, s2);
    const FnBound fixed = fn_maximal_bound(tail, kInverseSquare, kInverseQ, n, x, 1.0, s2);
    CHECK(best.value <= fixed.total + 1e-12);
    CHECK(best.r >= 1.0);
    CHECK(best.value > 0.0);
  }
}

TEST_CASE("lil constants for a geometric mixing sequence") {
  const TailSpec tail = TailSpec::cutoff(1.0, 1.0);
  const LilConstant lc = lil_constant(tail, kGeometric, 64);
  CHECK(lc.term0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lc.series_from1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lc.a_chain == doctest::Approx(28.284271247461902).epsilon(1e-9));
  CHECK(lc.a_map == doctest::Approx(56.568542494923804).epsilon(1e-9));
  CHECK(lc.tail_relative < 1e-12);

  CHECK_THROWS_AS(lil_constant(tail, kGeometric, 8), std::invalid_argument);
  const AlphaFn slow = [](int k) { return 1.0 / std::sqrt(k + 1.0); };
  CHECK_THROWS_AS(lil_constant(tail, slow, 64), std::runtime_error);
}

TEST_CASE("pinelis bound and the coin-flip martingale") {
  CHECK(pinelis_bound(1.0, 4.0, 4.0) == doctest::Approx(0.42654804713393937).epsilon(1e-12));
  CHECK(pinelis_bound(1.0, 400.0, 80.0) < pinelis_bound(1.0, 400.0, 60.0));
  CHECK_THROWS_AS(pinelis_bound(0.0, 1.0, 1.0), std::invalid_argument);

  const PinelisTest mc = pinelis_martingale_test(1.0, 400, 60.0, 20000, 4242);
  CHECK(mc.bound == doctest::Approx(2 * std::exp(-400 * bennett_h(0.15))).epsilon(1e-12));
  CHECK(mc.mc_probability > 0.0);
  CHECK(mc.wilson_upper <= mc.bound);
  CHECK(mc.pass);
}

TEST_CASE("rio covariance envelope closed form") {
  const TailSpec tail = TailSpec::cutoff(1.0, 1.0);
  CHECK(rio_covariance_bound(tail, kInverseSquare, 3) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(rio_covariance_bound(tail, kInverseSquare, 0) == doctest::Approx(4.0).epsilon(1e-14));
  for (int lag = 1; lag < 32; ++lag)
    CHECK(rio_covariance_bound(tail, kInverseSquare, lag) <=
          rio_covariance_bound(tail, kInverseSquare, lag - 1));
}

TEST_CASE("slln series bound against the layered reference sum") {
  const TailSpec tail = TailSpec::cutoff(1.0, 1.0);
  const SllnSeriesBound sb = slln_series_bound(tail, kInverseSquare, 1.5, 0.25, 1024);
  REQUIRE(sb.series_finite);
  REQUIRE(sb.proxy_finite);
  CHECK(sb.series_value == doctest::Approx(1.1915148460).epsilon(5e-6));
  CHECK(sb.proxy_value == doctest::Approx(1.2).epsilon(1e-6));

  SUBCASE("divergent tail is reported, not masked") {
    const TailSpec heavy = TailSpec::power(1.0, 1.4);
    const SllnSeriesBound bad = slln_series_bound(heavy, kInverseSquare, 1.5, 0.25, 64);
    CHECK_FALSE(bad.series_finite);
    CHECK(std::isinf(bad.series_value));
    CHECK_FALSE(bad.proxy_finite);
  }

  SUBCASE("proxy verdict agrees with the moment condition") {
    const std::vector<TailSpec> specs = {
        TailSpec::power(1.0, 4.0),
        TailSpec::power(1.0, 1.4),
        TailSpec::cutoff(1.0, 1.0),
        TailSpec::power_log(1.0, 1.8, 2.5),
    };
    for (const TailSpec& spec : specs) {
      const ConditionResult cond = check_condition(spec, 0.25, 1.5, "rate");
      const SllnSeriesBound out = slln_series_bound(spec, kInverseCube, 1.5, 0.25, 128);
      CHECK(out.proxy_finite == cond.holds);
    }
  }

  SUBCASE("parameter contracts") {
    CHECK_THROWS_AS(slln_series_bound(tail, kInverseSquare, 2.0, 0.25, 64), std::invalid_argument);
    CHECK_THROWS_AS(slln_series_bound(tail, kInverseSquare, 1.5, 0.8, 64), std::invalid_argument);
    CHECK_THROWS_AS(slln_series_bound(tail, kInverseSquare, 1.5, 0.25, 8), std::invalid_argument);
  }
}
