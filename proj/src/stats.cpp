#include "prewet/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "prewet/error.hpp"

namespace prewet {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(Errc::insufficient_grid, "line fit needs at least two paired points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(Errc::insufficient_grid, "line fit needs distinct abscissae");
  LinearFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    const double s2 = sse / (n - 2.0);
    f.slope_stderr = std::sqrt(s2 / sxx);
    f.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

ChiSquareResult chi_square_test(std::span<const double> counts, std::span<const double> probs,
                                double min_expected) {
  if (counts.size() != probs.size() || counts.empty())
    throw Error(Errc::invalid_parameter, "chi-square needs matching non-empty categories");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  ChiSquareResult r;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    if (e < min_expected) {
      pooled_obs += counts[i];
      pooled_exp += e;
      continue;
    }
    r.statistic += (counts[i] - e) * (counts[i] - e) / e;
    ++r.bins;
  }
  if (pooled_exp > 0.0) {
    r.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++r.bins;
  } else if (pooled_obs > 0.0) {
    r.statistic = std::numeric_limits<double>::infinity();  // mass where the law has none
  }
  r.dof = r.bins - 1;
  if (r.dof < 1) return r;
  if (!std::isfinite(r.statistic)) {
    r.p_value = 0.0;
    return r;
  }
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

AutocorrelationEstimate integrated_autocorrelation(std::span<const double> series, double c) {
  const std::size_t n = series.size();
  if (n < 2) throw Error(Errc::insufficient_grid, "autocorrelation needs at least two samples");
  AutocorrelationEstimate a;
  a.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - a.mean) * (series[i + lag] - a.mean);
    return s / static_cast<double>(n);
  };
  a.variance = autocov(0);
  if (!(a.variance > 0.0)) return a;
  double tau = 0.5;
  std::size_t m = 1;
  for (; m < n; ++m) {
    tau += autocov(m) / a.variance;
    if (static_cast<double>(m) >= c * tau) break;
  }
  a.tau_int = std::max(tau, 0.5);
  a.window = static_cast<int>(m);
  a.stderr_of_mean = std::sqrt(2.0 * a.tau_int * a.variance / static_cast<double>(n));
  return a;
}

}  // namespace prewet
