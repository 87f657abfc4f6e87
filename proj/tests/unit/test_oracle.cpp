#include <doctest.h>

#include <cmath>

#include "prewet/error.hpp"
#include "prewet/experiments.hpp"
#include "prewet/oracle.hpp"

using namespace prewet;
using oracle::Rational;

TEST_CASE("enumeration of tiny path spaces") {
  BridgeSpec s;
  s.length = 2;
  s.truncation = 3;
  const auto law = oracle::enumerate_paths(s);
  CHECK(law.size() == 2);
  CHECK(static_cast<double>(law.partition) == doctest::Approx(5.0 / 16.0).epsilon(1e-15));
  CHECK(law.mean(1) == doctest::Approx(0.2));
  CHECK(law.mean_area() == doctest::Approx(0.2));

  // Motzkin-like count of non-negative lazy paths 0 -> 0 in 4 steps:
  // weights differ, but the support count is the Motzkin number 9
  s.length = 4;
  CHECK(oracle::enumerate_paths(s).size() == 9);
  s.length = 40;
  s.truncation = 20;
  CHECK_THROWS_AS(oracle::enumerate_paths(s, 1e6), Error);
}

TEST_CASE("exact lazy walk laws") {
  const auto step = oracle::lazy_rational_step();
  CHECK(oracle::variance_of(step) == Rational(1, 2));
  const auto laws = oracle::walk_laws(step, 4);
  CHECK(laws[2].at(0) == Rational(3, 8));
  CHECK(laws[2].at(2) == Rational(1, 16));
  CHECK(laws[4].at(4) == Rational(1, 256));
  Rational total = 0;
  for (const auto& m : laws[4].mass) total += m;
  CHECK(total == 1);
}

TEST_CASE("bridge conditional moments in closed form") {
  const auto step = oracle::lazy_rational_step();
  // m = 2, d = 2 forces both jumps to +1
  const auto m2 = oracle::bridge_conditional_moments(step, 2, 2);
  CHECK(m2.mean[1] == 1);
  CHECK(m2.variance[1] == 0);
  CHECK(m2.jump_second_moment == 1);
  // m = 2, d = 0: xi_1 in {-1, 0, 1} with weights 1/16, 1/4, 1/16
  const auto m0 = oracle::bridge_conditional_moments(step, 2, 0);
  CHECK(m0.endpoint_probability == Rational(3, 8));
  CHECK(m0.jump_second_moment == Rational(1, 3));
  CHECK(m0.variance[1] == Rational(1, 3));
}

TEST_CASE("exchangeability holds exactly for the lazy walk") {
  const auto step = oracle::lazy_rational_step();
  for (int m = 1; m <= 12; ++m)
    for (int d = -3; d <= 3; ++d) {
      if (std::abs(d) > m) continue;
      CAPTURE(m);
      CAPTURE(d);
      CHECK(oracle::exchangeability_holds(step, m, d));
    }
  const auto g = oracle::step_law(StepDistribution::two_sided_geometric(0.4, 8));
  for (int m = 2; m <= 8; ++m) CHECK(oracle::exchangeability_holds(g, m, 1));
}

TEST_CASE("inequalities on a small grid") {
  const auto step = oracle::step_law(StepDistribution::lazy_simple());
  for (int m = 2; m <= 10; ++m)
    for (int M = 1; M <= 5; ++M) {
      CHECK(oracle::etemadi_check(step, m, M).holds());
      for (int k = 1; k < m; ++k) CHECK(oracle::one_point_chebyshev_check(step, m, 0, k, M, 0).holds());
    }
  // no excursion above m - 1 in m - 1 steps of size one
  CHECK(oracle::conditional_max_tail(step, 4, 0, 3) == 0.0L);
  CHECK(oracle::conditional_max_tail(step, 4, 0, 0) > 0.0L);
  const auto m0 = oracle::llt_floor_check(step, 0);
  REQUIRE(m0.has_value());
  CHECK(*m0 >= 0);
  const auto drop = oracle::small_droplet_check(step, 2, 14, 2, 6, 2);
  CHECK(drop.zeta > 0.0);
  const auto tail = oracle::conditional_max_tail_grid(step, 4, 10, 1, 4, 1);
  for (const auto& p : tail.points)
    CHECK(p.probability <= tail.fitted_constant * std::pow(p.m, 1.5) / (p.M * p.M) * (1 + 1e-12));
}

TEST_CASE("full oracle suite passes on the canonical spec") {
  experiments::OracleSuiteConfig c;
  c.steps = {StepDistribution::lazy_simple(), StepDistribution::two_sided_geometric(0.5, 6)};
  const auto r = experiments::oracle_suite(c);
  for (const auto& ch : r.checks) {
    CAPTURE(ch.name);
    CAPTURE(ch.detail);
    CHECK(ch.passed);
  }
  CHECK(r.checks.size() > 10);
}
