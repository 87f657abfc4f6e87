#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "prewet/error.hpp"
#include "prewet/experiments.hpp"
#include "prewet/oracle.hpp"
#include "prewet/transfer.hpp"

namespace prewet::experiments {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double rel(double a, double b) {
  const double scale = std::max(std::abs(b), 1e-300);
  return std::abs(a - b) / scale;
}

// Worst-case tracker for one family of comparisons.
struct Worst {
  double value = 0.0;
  std::string where;
  std::size_t count = 0;
  void add(double v, const std::string& at) {
    ++count;
    if (count == 1 || v > value) {
      value = v;
      where = at;
    }
  }
};

void compare_spec(Report& r, const BridgeSpec& spec, const OracleSuiteConfig& c) {
  const std::string tag = "[spec=" + spec.hash() + "]";
  const auto law = oracle::enumerate_paths(spec);
  const auto tables = build_tables(spec, {.check_truncation = false});
  const double tol = c.tolerance;

  const double z_err = rel(tables.log_partition(), std::log(static_cast<double>(law.partition)));
  r.check("log partition" + tag, z_err <= tol, "relative error " + fmt(z_err));
  r.rows.push_back({spec.lambda, 0.0, "log_partition" + tag, tables.log_partition(), 0.0});

  Worst recombine;
  for (int k = 0; k <= spec.length; ++k)
    recombine.add(rel(tables.log_partition_at(k), tables.log_partition()), "k=" + std::to_string(k));
  r.check("partition recombines at every index" + tag, recombine.value <= 1e-12,
          "worst " + fmt(recombine.value) + " at " + recombine.where);

  Worst marg;
  for (int k = 0; k <= spec.length; ++k) {
    const auto dp = marginal(tables, k).pmf;
    const auto ex = law.marginal(k, tables.heights());
    for (std::size_t x = 0; x < dp.size(); ++x) {
      const double err = ex[x] == 0.0 ? std::abs(dp[x]) : rel(dp[x], ex[x]);
      marg.add(err, "k=" + std::to_string(k) + " x=" + std::to_string(x));
    }
  }
  r.check("marginals" + tag, marg.value <= tol,
          std::to_string(marg.count) + " entries, worst " + fmt(marg.value) + " at " + marg.where);

  if (spec.length >= 2) {
    Worst cov;
    for (int i = 1; i < spec.length; ++i) {
      const auto row = covariance_row(tables, i, spec.length - 1);
      for (int j = i; j < spec.length; ++j) {
        const double ex = law.covariance(i, j);
        const double scale = std::sqrt(std::max(law.covariance(i, i) * law.covariance(j, j), 0.0));
        const double err = std::abs(row[static_cast<std::size_t>(j - i)] - ex) / std::max(scale, 1e-300);
        cov.add(scale > 0.0 ? err : std::abs(row[static_cast<std::size_t>(j - i)]),
                "i=" + std::to_string(i) + " j=" + std::to_string(j));
      }
    }
    r.check("covariances" + tag, cov.value <= tol,
            std::to_string(cov.count) + " pairs, worst " + fmt(cov.value) + " at " + cov.where);
  }

  if (spec.lambda > 0.0) {
    const auto area = area_statistics(tables, c.area_delta);
    const double e_up = rel(area.upper_probability, law.area_at_least(area.upper_threshold));
    const double e_lo = rel(area.lower_probability, law.area_at_most(area.lower_threshold));
    const double e_mean = rel(area.mean_area, law.mean_area());
    const double worst = std::max({e_up, e_lo, e_mean});
    r.check("area law" + tag, area.bucket == 1.0 && worst <= tol,
            "upper " + fmt(e_up) + ", lower " + fmt(e_lo) + ", mean " + fmt(e_mean));

    auto flat = spec;
    flat.lambda = 0.0;
    const auto free_law = oracle::enumerate_paths(flat);
    const double ratio = partition_ratio(spec, flat, {.check_truncation = false});
    const double expected = static_cast<double>(law.partition / free_law.partition);
    r.check("partition ratio" + tag, rel(ratio, expected) <= tol,
            "relative error " + fmt(rel(ratio, expected)));
  }
}

template <class T>
void identity_grid(Report& r, const oracle::LatticeLaw<T>& step, const std::string& name,
                   const OracleSuiteConfig& c) {
  const auto laws = oracle::walk_laws(step, c.identity_m_max);
  std::size_t points = 0;
  std::string failed;
  Worst second;
  const T s2 = oracle::variance_of(step);
  for (int m = 1; m <= c.identity_m_max; ++m)
    for (int d = -c.identity_d_max; d <= c.identity_d_max; ++d) {
      if (laws[static_cast<std::size_t>(m)].at(d) == T(0)) continue;
      ++points;
      if (!oracle::exchangeability_holds(step, m, d) && failed.empty())
        failed = "m=" + std::to_string(m) + " d=" + std::to_string(d);
      if (m >= 2) {
        const auto mom = oracle::bridge_conditional_moments(step, m, d);
        second.add(oracle::to_double(mom.jump_second_moment) / oracle::to_double(T(4) * s2),
                   "m=" + std::to_string(m) + " d=" + std::to_string(d));
      }
    }
  r.check("exchangeability identities[step=" + name + "]", failed.empty(),
          std::to_string(points) + " (m, d) pairs" + (failed.empty() ? "" : ", first failure " + failed));
  r.check("conditional jump second moment <= 4 sigma^2[step=" + name + "]", second.value <= 1.0,
          "worst ratio " + fmt(second.value) + " at " + second.where);
}

void inequality_grid(Report& r, const StepDistribution& sd, const OracleSuiteConfig& c) {
  const auto& name = sd.name();
  const auto step = oracle::step_law(sd);
  const auto laws = oracle::walk_laws(step, c.inequality_m_max);

  std::size_t points = 0;
  std::string failed;
  for (int m = 2; m <= c.inequality_m_max; ++m)
    for (int D = 0; D <= 2; ++D)
      for (int d = -D; d <= D; ++d) {
        if (laws[static_cast<std::size_t>(m)].at(d) == 0.0L) continue;
        for (int k = 1; k < m; ++k)
          for (int M = 1; M <= c.inequality_M_max; ++M) {
            ++points;
            if (!oracle::one_point_chebyshev_check(step, m, d, k, M, D).holds() && failed.empty())
              failed = "m=" + std::to_string(m) + " k=" + std::to_string(k) + " d=" + std::to_string(d) +
                       " M=" + std::to_string(M) + " D=" + std::to_string(D);
          }
      }
  r.check("one-point Chebyshev chain[step=" + name + "]", failed.empty(),
          std::to_string(points) + " points" + (failed.empty() ? "" : ", first failure " + failed));

  points = 0;
  failed.clear();
  for (int m = 2; m <= c.inequality_m_max; ++m)
    for (int M = 1; M <= c.inequality_M_max; ++M) {
      ++points;
      const auto e = oracle::etemadi_check(step, m, M);
      if (!e.holds() && failed.empty())
        failed = "m=" + std::to_string(m) + " M=" + std::to_string(M) + " exact " + fmt(e.exact) +
                 " bound " + fmt(e.bound);
    }
  r.check("maximal inequality[step=" + name + "]", failed.empty(),
          std::to_string(points) + " points" + (failed.empty() ? "" : ", first failure " + failed));

  const auto tail = oracle::conditional_max_tail_grid(step, 4, c.inequality_m_max, 1, 5, 2);
  r.rows.push_back({0.0, 0.0, "max_tail_constant[step=" + name + "]", tail.fitted_constant, 0.0});
  r.check("conditional maximum constant finite[step=" + name + "]",
          std::isfinite(tail.fitted_constant) && !tail.points.empty(),
          "c = " + fmt(tail.fitted_constant) + " over " + std::to_string(tail.points.size()) + " points");

  const auto drop = oracle::small_droplet_check(step, 2, c.inequality_m_max, 2, 6, 2);
  r.rows.push_back({0.0, 0.0, "droplet_zeta[step=" + name + "]", drop.zeta, 0.0});
  r.check("small droplet window nonempty[step=" + name + "]", drop.zeta > 0.0,
          "zeta " + fmt(drop.zeta) + ", first violation " + fmt(drop.first_violation));

  for (int d = 0; d <= 2; ++d) {
    const auto m0 = oracle::llt_floor_check(step, d);
    r.rows.push_back({0.0, 0.0, "llt_m0[step=" + name + " d=" + std::to_string(d) + "]",
                      m0 ? static_cast<double>(*m0) : -1.0, 0.0});
    r.check("local limit floor reached[step=" + name + " d=" + std::to_string(d) + "]",
            m0.has_value(), m0 ? "m0 = " + std::to_string(*m0) : "floor fails at m = 200");
  }
}

}  // namespace

BridgeSpec canonical_spec() {
  BridgeSpec s;
  s.step = StepDistribution::lazy_simple();
  s.potential = Potential::linear();
  s.lambda = 0.3;
  s.length = 6;
  s.start = 0;
  s.end = 1;
  s.truncation = 6;
  return s;
}

Report oracle_suite(const OracleSuiteConfig& c) {
  Report r;
  r.experiment = "oracle-check";
  for (const auto& spec : c.specs) compare_spec(r, spec, c);
  for (const auto& sd : c.steps) {
    if (sd == StepDistribution::lazy_simple())
      identity_grid(r, oracle::lazy_rational_step(), sd.name() + "/exact", c);
    else
      identity_grid(r, oracle::step_law(sd), sd.name(), c);
    inequality_grid(r, sd, c);
  }
  return r;
}

}  // namespace prewet::experiments
