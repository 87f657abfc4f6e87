#include <doctest.h>

#include <cmath>
#include <numeric>

#include "prewet/error.hpp"
#include "prewet/experiments.hpp"
#include "prewet/oracle.hpp"
#include "prewet/transfer.hpp"

using namespace prewet;

namespace {

BridgeSpec lazy_bridge(double lambda, int n, int a, std::optional<int> b, int k) {
  BridgeSpec s;
  s.lambda = lambda;
  s.length = n;
  s.start = a;
  s.end = b;
  s.truncation = k;
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// log-scale agreement; log Z can be exactly zero
double log_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("single step carries no potential") {
  for (double l : {0.0, 0.5, 3.0}) {
    const auto t = build_tables(lazy_bridge(l, 1, 0, 0, 4));
    CHECK(t.partition() == doctest::Approx(0.5).epsilon(1e-14));
  }
  const auto t = build_tables(lazy_bridge(2.0, 1, 2, 3, 8));
  CHECK(t.partition() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("two-step partition function is a two-term sum") {
  const auto t = build_tables(lazy_bridge(0.5, 2, 0, 0, 4));
  CHECK(t.partition() == doctest::Approx(0.0625 * std::exp(-0.5) + 0.25).epsilon(1e-14));
  const auto free_walk = build_tables(lazy_bridge(0.0, 2, 0, 0, 4));
  CHECK(free_walk.partition() == doctest::Approx(5.0 / 16.0).epsilon(1e-14));
  CHECK(marginal(free_walk, 1).mean() == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("canonical spec against enumeration") {
  const auto spec = experiments::canonical_spec();
  const auto t = build_tables(spec, {.check_truncation = false});
  const auto law = oracle::enumerate_paths(spec);
  CHECK(rel(t.partition(), static_cast<double>(law.partition)) < 1e-12);
  for (int k = 0; k <= spec.length; ++k) {
    const auto dp = marginal(t, k).pmf;
    const auto ex = law.marginal(k, t.heights());
    for (std::size_t x = 0; x < dp.size(); ++x) CHECK(dp[x] == doctest::Approx(ex[x]).epsilon(1e-12));
  }
  CHECK(covariance(t, 2, 4) == doctest::Approx(law.covariance(2, 4)).epsilon(1e-10));
  CHECK(marginal(t, 0).pmf[0] == 1.0);
  CHECK(marginal(t, spec.length).pmf[1] == doctest::Approx(1.0));
}

TEST_CASE("area events against enumeration with exact areas") {
  auto spec = lazy_bridge(0.5, 8, 0, 0, 5);
  const auto t = build_tables(spec, {.check_truncation = false});
  const auto law = oracle::enumerate_paths(spec);
  for (double delta : {0.3, 0.5, 0.8}) {
    CAPTURE(delta);
    const auto a = area_statistics(t, delta, {.scale = 1.5});
    REQUIRE(a.bucket == 1.0);
    CHECK(a.upper_probability == doctest::Approx(law.area_at_least(a.upper_threshold)).epsilon(1e-10));
    CHECK(a.lower_probability == doctest::Approx(law.area_at_most(a.lower_threshold)).epsilon(1e-10));
    CHECK(a.mean_area == doctest::Approx(law.mean_area()).epsilon(1e-12));
  }
}

TEST_CASE("property: random small specs agree with enumeration") {
  const auto steps = builtin_steps();
  int checked = 0;
  for (const auto& [key, step] : steps) {
    if (step.width() > 7) continue;
    for (double l : {0.0, 0.1, 0.7})
      for (int n = 1; n <= 5; ++n)
        for (int a = 0; a <= 2; ++a)
          for (std::optional<int> b : {std::optional<int>(0), std::optional<int>(2), std::optional<int>()}) {
            BridgeSpec s;
            s.step = step;
            s.potential = Potential::power(1.5);
            s.lambda = l;
            s.length = n;
            s.start = a;
            s.end = b;
            s.truncation = 4;
            oracle::PathLaw law;
            try {
              law = oracle::enumerate_paths(s);
            } catch (const Error& e) {
              REQUIRE(e.code() == Errc::empty_path_space);
              CHECK_THROWS_AS(build_tables(s, {.check_truncation = false}), Error);
              continue;
            }
            const auto t = build_tables(s, {.check_truncation = false});
            CAPTURE(s.hash());
            CHECK(rel(t.partition(), static_cast<double>(law.partition)) < 1e-12);
            for (int k = 0; k <= n; ++k) {
              CHECK(log_gap(t.log_partition_at(k), t.log_partition()) < 1e-10);
              CHECK(marginal(t, k).mean() == doctest::Approx(law.mean(k)).epsilon(1e-10));
            }
            ++checked;
          }
  }
  CHECK(checked > 100);
}

TEST_CASE("property: Z recombines at every index on long bridges") {
  for (double l : {1e-1, 1e-2, 1e-3}) {
    const double h = canonical_scale(Potential::linear(), l);
    BridgeSpec s = lazy_bridge(l, static_cast<int>(10 * h * h), 0, 0, 1);
    s.truncation = default_truncation(s.step, s.potential, l, s.length, 0, 0);
    const auto t = build_tables(s);
    for (int k = 0; k <= s.length; k += std::max(1, s.length / 37))
      CHECK(log_gap(t.log_partition_at(k), t.log_partition()) < 1e-10);
  }
}

TEST_CASE("partition ratio") {
  const auto spec = experiments::canonical_spec();
  auto flat = spec;
  flat.lambda = 0.0;
  CHECK(partition_ratio(flat, flat) == 1.0);
  const double r = partition_ratio(spec, flat);
  const auto a = oracle::enumerate_paths(spec), b = oracle::enumerate_paths(flat);
  CHECK(r == doctest::Approx(static_cast<double>(a.partition / b.partition)).epsilon(1e-12));
  CHECK(r > 0.0);
  CHECK(r < 1.0);
  auto other = flat;
  other.length = 7;
  CHECK_THROWS_AS(partition_ratio(spec, other), Error);
  // no interior site: nothing to tilt
  CHECK(partition_ratio(lazy_bridge(0.9, 1, 0, 0, 3), lazy_bridge(0.0, 1, 0, 0, 3)) == 1.0);
}

TEST_CASE("property: Z strictly decreasing and marginal means non-increasing in lambda") {
  for (const auto& [key, step] : builtin_steps()) {
    CAPTURE(key);
    double last_z = std::numeric_limits<double>::infinity();
    std::vector<double> last_mean(40, std::numeric_limits<double>::infinity());
    for (double l : {0.0, 0.01, 0.03, 0.1, 0.3}) {
      BridgeSpec s;
      s.step = step;
      s.lambda = l;
      s.length = 30;
      s.start = 1;
      s.end = 0;
      s.truncation = 60;
      const auto t = build_tables(s, {.check_truncation = false});
      CHECK(t.log_partition() < last_z);
      last_z = t.log_partition();
      for (int k = 1; k < s.length; ++k) {
        const double m = marginal(t, k).mean();
        CHECK(m <= last_mean[static_cast<std::size_t>(k)] + 1e-12);
        last_mean[static_cast<std::size_t>(k)] = m;
      }
    }
  }
}

TEST_CASE("unpinned bridge delocalizes") {
  double prev = 0.0;
  for (int n : {10, 40, 160, 640}) {
    const auto t = build_tables(lazy_bridge(0.0, n, 0, 0, 8 * static_cast<int>(std::sqrt(n)) + 8));
    const double m = marginal(t, n / 2).mean();
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("truncation and contract errors") {
  CHECK_THROWS_AS(build_tables(lazy_bridge(0.0, 400, 0, 0, 5)), Error);
  try {
    build_tables(lazy_bridge(0.0, 400, 0, 0, 5));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::truncation_overflow);
  }
  const auto t = build_tables_auto(lazy_bridge(0.0, 400, 0, 0, 5), 4);
  CHECK(t.spec().truncation >= 40);

  const auto spec = experiments::canonical_spec();
  const auto c = build_tables(spec, {.check_truncation = false});
  try {
    tail_probability(c, 3, 6.0);
    FAIL("expected threshold error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::threshold_beyond_truncation);
  }
  const double p0 = tail_probability(c, 3, 0.0);
  CHECK(p0 > 0.0);
  CHECK(p0 < 1.0);
  try {
    covariance(c, 4, 2);
    FAIL("expected index order error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::index_order);
  }
  CHECK(covariance(c, 3, 3) >= 0.0);
  try {
    area_statistics(c, 0.5, {.work_budget = 10.0});
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::area_dp_budget);
  }
}

TEST_CASE("property: doubling the truncation leaves Z unchanged to 10 eps") {
  for (double l : {1e-1, 1e-2, 1e-3}) {
    const double h = canonical_scale(Potential::linear(), l);
    BridgeSpec s = lazy_bridge(l, static_cast<int>(4 * h * h), 0, 0, 1);
    s.truncation = default_truncation(s.step, s.potential, l, s.length, 0, 0);
    const auto t1 = build_tables(s);
    s.truncation *= 2;
    const auto t2 = build_tables(s);
    CHECK(std::abs(std::expm1(t2.log_partition() - t1.log_partition())) < 10 * s.tail_tolerance);
  }
}

TEST_CASE("covariance row equals pointwise covariance and marginals are normalized") {
  auto s = lazy_bridge(0.05, 60, 0, 0, 40);
  const auto t = build_tables(s);
  const auto row = covariance_row(t, 20, 40);
  for (int j = 20; j <= 40; ++j) CHECK(row[static_cast<std::size_t>(j - 20)] == doctest::Approx(covariance(t, 20, j)).epsilon(1e-12));
  for (int k = 0; k <= s.length; ++k) {
    const auto p = marginal(t, k).pmf;
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
