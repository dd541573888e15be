#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpmlab/gpm_map.hpp"

using namespace gpmlab;

TEST_CASE("lsv preset evaluates its closed form") {
  const GpmMap map = GpmMap::lsv(0.5);
  // 0.25 (1 + 2^0.5 0.25^0.5) = 0.25 + sqrt(2)/8
  CHECK(map.apply(0.25) == doctest::Approx(0.42677669529663688).epsilon(1e-13));
  CHECK(map.apply(0.75) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(map.branch_of(0.3) == 0);
  CHECK(map.branch_of(0.7) == 1);
  CHECK(map.gamma() == 0.5);
  CHECK(map.z0() == doctest::Approx(0.25));

  const auto m = map.member_set();
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 1);
}

TEST_CASE("pm preset pins its breakpoint at the root of y + y^(1+gamma) = 1") {
  const GpmMap map = GpmMap::pm(0.5);
  CHECK(map.breakpoint(1) == doctest::Approx(0.56984029099805327).epsilon(1e-10));
  // continuity of the mod-1 wraparound: just below y1 the value approaches 1,
  // just above it restarts near 0
  CHECK(map.apply(map.breakpoint(1) - 1e-9) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(map.apply(map.breakpoint(1) + 1e-9) < 1e-6);
  const auto m = map.member_set();
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 1);
}

TEST_CASE("doubling preset is piecewise affine") {
  const GpmMap map = GpmMap::doubling();
  CHECK(map.apply(0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(map.apply(0.75) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(map.branch_deriv(0, 0.2) == doctest::Approx(2.0));
  CHECK(map.branch_second_deriv(0, 0.2) == doctest::Approx(0.0));
}

TEST_CASE("inverse branches match forward evaluation to near machine precision") {
  const GpmMap map = GpmMap::lsv(0.5);
  for (double y : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.49}) {
    const double x = map.branch_value(0, y);
    CHECK(map.inverse_branch(0, x) == doctest::Approx(y).epsilon(1e-12));
    CHECK(map.inverse_branch_deriv(0, x) ==
          doctest::Approx(1.0 / map.branch_deriv(0, y)).epsilon(1e-10));
  }
  for (double y : {0.55, 0.7, 0.9, 0.99}) {
    const double x = map.branch_value(1, y);
    CHECK(map.inverse_branch(1, x) == doctest::Approx(y).epsilon(1e-12));
  }
}

TEST_CASE("second derivative of the neutral branch follows c x^(gamma-1)") {
  const GpmMap map = GpmMap::lsv(0.5);
  // T''(x) = 2^g g(1+g) x^(g-1); at g = 0.5 the prefactor is 3 sqrt(2)/4
  const double c = std::pow(2.0, 0.5) * 0.5 * 1.5;
  for (double x : {1e-3, 1e-5, 1e-7}) {
    CHECK(map.branch_second_deriv(0, x) * std::pow(x, 0.5) ==
          doctest::Approx(c).epsilon(1e-9));
  }
  // finite differences of T' agree with the analytic second derivative
  const double x = 1e-3, h = 1e-7;
  const double fd = (map.branch_deriv(0, x + h) - map.branch_deriv(0, x - h)) / (2 * h);
  CHECK(fd == doctest::Approx(map.branch_second_deriv(0, x)).epsilon(1e-5));
}

TEST_CASE("z sequence inverts the neutral branch step by step") {
  const GpmMap map = GpmMap::lsv(0.5);
  // start from T(0.25), so the first pullback is exactly 0.25 and the second
  // solves y + sqrt(2) y^1.5 = 0.25
  const ZSequence z = z_sequence(map, 4, 0.42677669529663688);
  REQUIRE(z.values.size() >= 3);
  CHECK(z.values[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(z.values[2] == doctest::Approx(0.15972422986783816).epsilon(1e-10));
  CHECK(z.width(0) == doctest::Approx(z.values[0] - z.values[1]));
  for (std::size_t k = 0; k + 1 < z.values.size(); ++k) CHECK(z.values[k] > z.values[k + 1]);
}

TEST_CASE("z_n / z_2n approaches 2^(1/gamma)") {
  SUBCASE("gamma = 0.5") {
    const GpmMap map = GpmMap::lsv(0.5);
    const ZSequence z = z_sequence(map, 2000);
    CHECK(z_ratio_diagnostic(z, 1000) == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("gamma = 0.25") {
    const GpmMap map = GpmMap::lsv(0.25);
    const ZSequence z = z_sequence(map, 2000);
    CHECK(z_ratio_diagnostic(z, 1000) == doctest::Approx(16.0).epsilon(0.05));
  }
}

TEST_CASE("validator accepts the intermittent presets") {
  for (double g : {0.25, 0.5, 0.75}) {
    const ValidationReport rep = validate_gpm(GpmMap::lsv(g));
    CHECK(rep.all_pass());
  }
  CHECK(validate_gpm(GpmMap::pm(0.4)).all_pass());
}

TEST_CASE("validator rejects a map without a neutral fixed point") {
  const ValidationReport rep = validate_gpm(GpmMap::doubling());
  CHECK(rep.find("expansion").pass);
  CHECK_FALSE(rep.find("neutral-fixed-point").pass);
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("constructor rejects malformed branch data") {
  std::vector<BranchSpec> br(2);
  br[0] = {BranchSpec::Kind::lsv_neutral, 0.0, -1.0, 0.5};
  br[1] = {BranchSpec::Kind::affine, -1.0, 2.0, 1.0};
  CHECK_THROWS_AS(GpmMap(0.5, {0.0, 0.5, 1.0}, br, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(GpmMap::lsv(0.0), std::invalid_argument);
  CHECK_THROWS_AS(GpmMap::lsv(1.0), std::invalid_argument);
}
