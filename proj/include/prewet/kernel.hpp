#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "prewet/model.hpp"

// Banded products with the jump matrix P(x, y) = p(y - x) on {0..K}.
// Shared by the transfer, spectral and sampler modules; the oracle does not
// use it.
namespace prewet::detail {

/// out[y] = sum_x in[x] p(y - x)   (row vector times P)
inline void push_forward(const StepDistribution& step, std::span<const double> in,
                         std::span<double> out) {
  const int n = static_cast<int>(in.size());
  const auto p = step.dense();
  const int lo = step.min_jump();
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    const double pj = p[static_cast<std::size_t>(j)];
    if (pj == 0.0) continue;
    const int jump = lo + j;
    const int x0 = std::max(0, -jump);
    const int x1 = std::min(n, n - jump);
    for (int x = x0; x < x1; ++x)
      out[static_cast<std::size_t>(x + jump)] += pj * in[static_cast<std::size_t>(x)];
  }
}

/// out[x] = sum_y p(y - x) in[y]   (P times column vector)
inline void pull_back(const StepDistribution& step, std::span<const double> in,
                      std::span<double> out) {
  const int n = static_cast<int>(in.size());
  const auto p = step.dense();
  const int lo = step.min_jump();
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    const double pj = p[static_cast<std::size_t>(j)];
    if (pj == 0.0) continue;
    const int jump = lo + j;
    const int x0 = std::max(0, -jump);
    const int x1 = std::min(n, n - jump);
    for (int x = x0; x < x1; ++x)
      out[static_cast<std::size_t>(x)] += pj * in[static_cast<std::size_t>(x + jump)];
  }
}

/// Scales v to unit max-abs entry and returns the factor removed (0 if v == 0).
inline double normalize_max(std::span<double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m > 0.0)
    for (double& x : v) x /= m;
  return m;
}

inline std::vector<double> site_weights(const Potential& potential, double lambda, int truncation) {
  std::vector<double> w(static_cast<std::size_t>(truncation) + 1);
  for (int x = 0; x <= truncation; ++x)
    w[static_cast<std::size_t>(x)] = std::exp(-lambda * potential(static_cast<double>(x)));
  return w;
}

}  // namespace prewet::detail
