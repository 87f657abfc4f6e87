#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "prewet/error.hpp"
#include "prewet/model.hpp"

using namespace prewet;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::precondition;
}

}  // namespace

TEST_CASE("lazy walk moments and aperiodicity") {
  const auto s = StepDistribution::lazy_simple();
  CHECK(s.mean() == 0.0);
  CHECK(s.variance() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.aperiodicity_constant() == 1);
  CHECK(s(0) == 0.5);
  CHECK(s(1) == 0.25);
  CHECK(s(2) == 0.0);
}

TEST_CASE("step validation rejects broken laws") {
  CHECK(code_of([] { StepDistribution::from_pmf({-1, 0, 1}, {0.3, 0.3, 0.3}); }) == Errc::invalid_parameter);
  CHECK(code_of([] { StepDistribution::from_pmf({0, 1}, {0.5, 0.5}); }) == Errc::invalid_parameter);
  CHECK(code_of([] { StepDistribution::from_pmf({0}, {1.0}); }) == Errc::invalid_parameter);
  // simple walk without holding is periodic
  CHECK(code_of([] { StepDistribution::from_pmf({-1, 1}, {0.5, 0.5}); }) == Errc::invalid_parameter);
  CHECK(code_of([] { StepDistribution::two_sided_geometric(1.0, 10); }) == Errc::invalid_parameter);
  CHECK(code_of([] { StepDistribution::two_sided_geometric(0.0, 10); }) == Errc::invalid_parameter);
  CHECK(code_of([] { StepDistribution::discrete_gaussian(0.0, 10); }) == Errc::invalid_parameter);
}

TEST_CASE("period-two support with holding at distance two is aperiodic after a few steps") {
  const auto s = StepDistribution::from_pmf({-2, 0, 2, 1, -1}, {0.2, 0.2, 0.2, 0.2, 0.2});
  CHECK(s.aperiodicity_constant() >= 1);
}

TEST_CASE("catalog laws") {
  const auto cat = builtin_steps();
  REQUIRE(cat.size() >= 3);
  for (const auto& [key, s] : cat) {
    CAPTURE(key);
    const auto d = s.dense();
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.mean()) < 1e-12);
    const auto a = strict_aperiodicity_constant(d, s.min_jump(), 64);
    REQUIRE(a.has_value());
    CHECK(*a == s.aperiodicity_constant());
  }
  const auto g = StepDistribution::two_sided_geometric(0.5, 30);
  // 2q/(1-q)^2 = 4 up to a tail of order 30^2 2^-30
  CHECK(g.variance() == doctest::Approx(4.0).epsilon(1e-6));
  const auto n = StepDistribution::discrete_gaussian(2.0, 20);
  for (int k = 1; k <= 20; ++k) CHECK(n(k) == n(-k));
}

TEST_CASE("potentials") {
  const auto lin = Potential::linear();
  CHECK(lin(3.0) == 3.0);
  CHECK(lin(-3.0) == 3.0);
  CHECK(Potential::power(2.0)(3.0) == doctest::Approx(9.0));
  CHECK(code_of([] { Potential::power(0.5); }) == Errc::invalid_parameter);
  CHECK(code_of([] { Potential::table({1.0, 2.0}); }) == Errc::invalid_parameter);
  CHECK(code_of([] { Potential::table({0.0, 2.0, 1.0}); }) == Errc::invalid_parameter);
  CHECK(code_of([] { Potential::table({0.0, 2.0, 3.0}); }) == Errc::invalid_parameter);  // concave
  const auto t = Potential::table({0.0, 1.0, 3.0});
  CHECK(t(1.5) == doctest::Approx(2.0));
  CHECK(t(4.0) == doctest::Approx(7.0));  // last slope 2 extended
  CHECK(lin.growth_bound(2.0) == 2.0);
  CHECK(Potential::power(3.0).growth_bound(2.0) == doctest::Approx(8.0));
  CHECK(std::isfinite(t.growth_bound(2.0)));
  CHECK(t.growth_bound(2.0) >= 2.0);
}

TEST_CASE("property: potentials are midpoint convex and non-decreasing on a sampled grid") {
  for (const auto& v : {Potential::linear(), Potential::power(1.5), Potential::power(2.0),
                        Potential::table({0.0, 0.5, 1.5, 3.0, 5.0})}) {
    CAPTURE(v.describe());
    for (double x = 0.0; x <= 40.0; x += 0.37)
      for (double y = x; y <= 40.0; y += 1.91) {
        CHECK(v(x) <= v(y) + 1e-12);
        CHECK(v(0.5 * (x + y)) <= 0.5 * (v(x) + v(y)) + 1e-9);
      }
    for (double a : {0.25, 0.5, 2.0, 4.0}) CHECK(std::isfinite(v.growth_bound(a)));
  }
}

TEST_CASE("scale equation closed forms") {
  const auto lin = Potential::linear();
  CHECK(solve_H(lin, 0.5, 1e-3) == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(solve_H(Potential::power(2.0), 0.5, 1e-4) == doctest::Approx(10.0).epsilon(1e-10));
  for (double l : {1e-2, 1e-3, 1e-4, 1e-6}) {
    CHECK(canonical_scale(lin, l) == doctest::Approx(std::cbrt(1.0 / (2.0 * l))).epsilon(1e-10));
    CHECK(canonical_scale(Potential::power(2.0), l) == doctest::Approx(std::pow(4.0 * l, -0.25)).epsilon(1e-10));
  }
  CHECK(code_of([&] { solve_H(lin, 1.0, 0.0); }) == Errc::invalid_parameter);
  CHECK(code_of([&] { solve_H(lin, -1.0, 1e-3); }) == Errc::invalid_parameter);
}

TEST_CASE("property: scale is decreasing in lambda and gamma^(1/3) H is non-increasing in gamma") {
  for (const auto& v : {Potential::linear(), Potential::power(2.0), Potential::table({0.0, 1.0, 3.0, 6.0})}) {
    CAPTURE(v.describe());
    double prev = 0.0;
    for (double l = 1.0; l > 1e-7; l /= 3.0) {
      const double h = canonical_scale(v, l);
      CHECK(h > prev);
      prev = h;
    }
    for (double l : {1e-2, 1e-4}) {
      double last = std::numeric_limits<double>::infinity();
      for (double g : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double s = std::cbrt(g) * solve_H(v, g, l);
        CHECK(s <= last * (1.0 + 1e-9));
        last = s;
      }
    }
  }
}

TEST_CASE("conditional jump law") {
  const auto lazy = StepDistribution::lazy_simple();
  const auto c0 = conditional_step(lazy, 0);
  REQUIRE(c0.support == std::vector<int>{0, 1});
  CHECK(c0.probs[0] == doctest::Approx(2.0 / 3.0));
  CHECK(c0.probs[1] == doctest::Approx(1.0 / 3.0));
  CHECK(c0.mean == doctest::Approx(1.0 / 3.0));
  const auto c5 = conditional_step(lazy, 5);
  CHECK(c5.mean == 0.0);
  CHECK(c5.admissible_mass == 1.0);

  // two-sided geometric, x = 1: admissible jumps k >= -1
  const double q = 0.5;
  const auto g = StepDistribution::two_sided_geometric(q, 30);
  const auto c1 = conditional_step(g, 1);
  double mass = 0.0, first = 0.0;
  for (int k = -1; k <= 30; ++k) {
    mass += g(k);
    first += k * g(k);
  }
  CHECK(c1.admissible_mass == doctest::Approx(mass).epsilon(1e-14));
  CHECK(c1.mean == doctest::Approx(first / mass).epsilon(1e-12));
  // closed form for the untruncated law: P(xi >= -1) = 1 - q^2 / (1 + q)
  CHECK(c1.admissible_mass == doctest::Approx(1.0 - q * q / (1.0 + q)).epsilon(1e-8));
  CHECK(code_of([&] { conditional_step(lazy, -1); }) == Errc::invalid_parameter);
}

TEST_CASE("property: conditional means decrease to zero and variances stay bounded") {
  for (const auto& [key, s] : builtin_steps()) {
    CAPTURE(key);
    double prev = std::numeric_limits<double>::infinity();
    for (int x = 0; x <= s.max_jump() + 3; ++x) {
      const auto c = conditional_step(s, x);
      CHECK(c.mean <= prev + 1e-15);
      CHECK(c.mean >= -1e-15);
      CHECK(c.variance <= s.variance() / c.admissible_mass + 1e-12);
      prev = c.mean;
    }
    CHECK(std::abs(conditional_step(s, -s.min_jump()).mean) < 1e-12);
  }
}

TEST_CASE("bridge spec validation and hashing") {
  BridgeSpec s;
  s.lambda = 0.3;
  s.length = 6;
  s.end = 1;
  s.truncation = 6;
  CHECK_NOTHROW(s.validate());
  auto bad = s;
  bad.lambda = -1.0;
  CHECK(code_of([&] { bad.validate(); }) == Errc::invalid_parameter);
  bad = s;
  bad.end = 7;
  CHECK(code_of([&] { bad.validate(); }) == Errc::invalid_parameter);
  bad = s;
  bad.tail_tolerance = 1e-3;
  CHECK(code_of([&] { bad.validate(); }) == Errc::invalid_parameter);
  bad = s;
  bad.length = 0;
  CHECK(code_of([&] { bad.validate(); }) == Errc::invalid_parameter);

  auto other = s;
  CHECK(other.hash() == s.hash());
  other.lambda = 0.30000000000000004;
  CHECK(other.hash() != s.hash());
  other = s;
  other.end.reset();
  CHECK(other.hash() != s.hash());
  CHECK(s.hash().size() == 16);
}

TEST_CASE("default truncation") {
  const auto lazy = StepDistribution::lazy_simple();
  const double h = canonical_scale(Potential::linear(), 1e-3);
  CHECK(default_truncation(lazy, Potential::linear(), 1e-3, 100, 2, 5) ==
        static_cast<int>(std::ceil(8.0 * h)) + 5 + 1);
  CHECK(default_truncation(lazy, Potential::linear(), 0.0, 200, 0, 0) ==
        static_cast<int>(std::ceil(8.0 * std::sqrt(0.5 * 200.0))) + 1);
}
