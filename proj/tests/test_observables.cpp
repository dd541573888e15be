#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpmlab/density.hpp"
#include "gpmlab/grid.hpp"
#include "gpmlab/observables.hpp"

using namespace gpmlab;

TEST_CASE("power tails evaluate in closed form") {
  const TailSpec tail = TailSpec::power(1.0, 4.0);
  CHECK(tail.H(2.0) == doctest::Approx(0.0625).epsilon(1e-13));
  CHECK(tail.H(0.5) == doctest::Approx(1.0));
  CHECK(tail.Q(0.1) == doctest::Approx(1.7782794100389228).epsilon(1e-12));
  CHECK(tail.integral_Q_pow(2.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(tail.Q_pow_integrable(2.0));
  CHECK_FALSE(tail.Q_pow_integrable(4.0));
  CHECK(tail.xH_integrable());
  CHECK_FALSE(TailSpec::power(1.0, 2.0).xH_integrable());
}

TEST_CASE("cutoff tails are step functions") {
  const TailSpec tail = TailSpec::cutoff(0.3, 2.0);
  CHECK(tail.H(1.0) == doctest::Approx(0.3));
  CHECK(tail.H(2.5) == doctest::Approx(0.0));
  CHECK(tail.Q(0.1) == doctest::Approx(2.0));
  CHECK(tail.Q(0.5) == doctest::Approx(0.0));
  CHECK(tail.integral_Q_pow(2.0) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(tail.integral_Q_pow(2.0, 0.1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(tail.xH_integrable());
}

TEST_CASE("logarithmic tails invert consistently") {
  const TailSpec tail = TailSpec::power_log(1.0, 3.0, 1.5);
  for (double u : {0.5, 0.2, 0.05, 0.01, 1e-4}) {
    const double x = tail.Q(u);
    CHECK(tail.H(x) == doctest::Approx(u).epsilon(1e-8));
  }
  for (double x : {1.5, 3.0, 10.0, 100.0}) {
    const double u = tail.H(x);
    CHECK(tail.Q(u) == doctest::Approx(x).epsilon(1e-8));
  }
}

TEST_CASE("moment conditions follow the exponent algebra") {
  SUBCASE("quadratic case at gamma = 0.25 needs q > 3") {
    CHECK(check_condition(TailSpec::power(1.0, 3.5), 0.25, 2.0, "lil").holds);
    CHECK_FALSE(check_condition(TailSpec::power(1.0, 2.9), 0.25, 2.0, "lil").holds);
    // integral of x min(1,x^-4) dx = 1/2 + 1/2
    const ConditionResult r = check_condition(TailSpec::power(1.0, 6.0), 0.25, 2.0, "lil");
    REQUIRE(r.holds);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("rate case at gamma = 0.4, p = 1.5") {
    const ConditionResult r = check_condition(TailSpec::power(1.0, 4.5), 0.4, 1.5, "rate");
    REQUIRE(r.holds);
    CHECK(r.value == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    CHECK_FALSE(check_condition(TailSpec::power(1.0, 2.0), 0.4, 1.5, "rate").holds);
    CHECK(check_condition(TailSpec::cutoff(1.0, 5.0), 0.4, 1.5, "rate").holds);
  }
  SUBCASE("weak rate accepts the marginal power") {
    CHECK(check_condition(TailSpec::power(1.0, 4.0), 0.4, 1.5, "rate_weak").holds);
  }
}

TEST_CASE("change of variables identity closes to quadrature accuracy") {
  // beta-type oracle: power(1,q) gives lhs = rhs = q/(q e - p) with
  // e = (1 - p g)/(1 - g); here e = 5/6 and the value is 2.1818...
  const ChangeOfVariablesResult r =
      change_of_variables_identity(TailSpec::power(1.0, 4.0), 0.25, 1.5);
  CHECK(r.rel_gap < 1e-6);
  CHECK(r.lhs == doctest::Approx(2.1818181818181818).epsilon(1e-5));

  for (const TailSpec& tail :
       {TailSpec::power(0.7, 3.0), TailSpec::power_log(1.0, 4.0, 1.5),
        TailSpec::power_log(0.8, 3.0, -0.5), TailSpec::cutoff(1.0, 1.0),
        TailSpec::cutoff(0.6, 2.4)}) {
    const ChangeOfVariablesResult c = change_of_variables_identity(tail, 0.25, 1.5);
    CHECK(c.rel_gap < 1e-6);
  }
}

TEST_CASE("observables evaluate their pieces with normalized weights") {
  const ObservableSpec ind = ObservableSpec::indicator(0.2, 0.7);
  CHECK(ind.eval(0.5) == doctest::Approx(1.0));
  CHECK(ind.eval(0.1) == doctest::Approx(0.0));
  CHECK(ind.disjoint_supports());

  const ObservableSpec pow = ObservableSpec::power_singularity(0.5);
  CHECK(pow.eval(0.25) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(pow.eval(0.01) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("integrals and tails against the flat reference density") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(256);
  const DensityModel dens = invariant_density(map, grid);

  const ObservableSpec ind = ObservableSpec::indicator(0.2, 0.7);
  CHECK(nu_mean(ind, dens) == doctest::Approx(0.5).epsilon(0.01));

  // f(x) = x^(-1/2): mean 2, nu(|f| > t) = t^(-2), quantile u^(-1/2)
  const ObservableSpec f = ObservableSpec::power_singularity(0.5);
  CHECK(nu_mean(f, dens) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(nu_tail(f, dens, 2.0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(empirical_quantile(f, dens, 0.25) == doctest::Approx(2.0).epsilon(0.05));

  std::vector<double> t_grid;
  for (int i = 0; i < 24; ++i) t_grid.push_back(1.5 * std::pow(1.25, i));
  const EmpiricalTail tail = tail_of_observable(f, dens, t_grid);
  REQUIRE(tail.fit.valid);
  CHECK(tail.fit.slope == doctest::Approx(-2.0).epsilon(0.12));
}

TEST_CASE("membership verdicts agree between tail and quantile form") {
  const GpmMap map = GpmMap::doubling();
  const Grid grid = uniform_grid(256);
  const DensityModel dens = invariant_density(map, grid);
  const ObservableSpec f = ObservableSpec::power_singularity(0.5);

  // true tail is t^(-2); a slightly inflated envelope dominates it, a
  // deflated one cannot
  const MembershipReport good = check_membership(f, dens, TailSpec::power(1.15, 2.0));
  CHECK(good.holds_H);
  CHECK(good.holds_Q == good.holds_H);

  const MembershipReport bad = check_membership(f, dens, TailSpec::power(0.6, 2.0));
  CHECK_FALSE(bad.holds_H);
  CHECK(bad.holds_Q == bad.holds_H);
}

TEST_CASE("singular pieces outside the integrable range are rejected") {
  const GpmMap map = GpmMap::lsv(0.5);
  const Grid grid = make_graded_grid(map, 128);
  const DensityModel dens = invariant_density(map, grid);
  // x^(-a) with a + gamma >= 1 is not nu-integrable
  const ObservableSpec f = ObservableSpec::power_singularity(0.6);
  CHECK_THROWS_AS(nu_mean(f, dens), std::domain_error);
}
