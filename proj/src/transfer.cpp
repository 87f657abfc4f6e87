#include "prewet/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "prewet/error.hpp"
#include "prewet/kernel.hpp"

namespace prewet {

std::span<const double> TransferTables::forward(int k) const {
  const auto n = static_cast<std::size_t>(heights());
  return {forward_.data() + static_cast<std::size_t>(k) * n, n};
}

std::span<const double> TransferTables::backward(int k) const {
  const auto n = static_cast<std::size_t>(heights());
  return {backward_.data() + static_cast<std::size_t>(k) * n, n};
}

double TransferTables::partition() const { return std::exp(log_z_); }

double TransferTables::log_partition_at(int k) const {
  const auto f = forward(k);
  const auto b = backward(k);
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += f[x] * b[x];
  return std::log(s) + forward_log_scale(k) + backward_log_scale(k);
}

double TransferTables::site_weight(int k, int y) const {
  if (k <= 0 || (k == spec_.length && !spec_.free_end())) return 1.0;
  return weights_[static_cast<std::size_t>(y)];
}

TransferTables build_tables(const BridgeSpec& spec, const BuildOptions& options) {
  spec.validate();
  TransferTables t;
  t.spec_ = spec;
  const int n_steps = spec.length;
  const auto heights = static_cast<std::size_t>(spec.truncation) + 1;
  t.weights_ = detail::site_weights(spec.potential, spec.lambda, spec.truncation);
  t.forward_.assign((static_cast<std::size_t>(n_steps) + 1) * heights, 0.0);
  t.backward_.assign((static_cast<std::size_t>(n_steps) + 1) * heights, 0.0);
  t.forward_log_.assign(static_cast<std::size_t>(n_steps) + 1, 0.0);
  t.backward_log_.assign(static_cast<std::size_t>(n_steps) + 1, 0.0);

  auto fwd = [&](int k) {
    return std::span<double>(t.forward_.data() + static_cast<std::size_t>(k) * heights, heights);
  };
  auto bwd = [&](int k) {
    return std::span<double>(t.backward_.data() + static_cast<std::size_t>(k) * heights, heights);
  };
  auto empty = [&] {
    return Error(Errc::empty_path_space, "no admissible path for spec " + spec.hash());
  };

  fwd(0)[static_cast<std::size_t>(spec.start)] = 1.0;
  for (int k = 1; k <= n_steps; ++k) {
    auto out = fwd(k);
    detail::push_forward(spec.step, fwd(k - 1), out);
    for (std::size_t y = 0; y < heights; ++y) out[y] *= t.site_weight(k, static_cast<int>(y));
    const double m = detail::normalize_max(out);
    if (m == 0.0) throw empty();
    t.forward_log_[static_cast<std::size_t>(k)] = t.forward_log_[static_cast<std::size_t>(k) - 1] +
                                                  std::log(m);
  }

  if (spec.free_end()) {
    std::fill(bwd(n_steps).begin(), bwd(n_steps).end(), 1.0);
  } else {
    bwd(n_steps)[static_cast<std::size_t>(*spec.end)] = 1.0;
  }
  std::vector<double> scratch(heights);
  for (int k = n_steps - 1; k >= 0; --k) {
    const auto next = bwd(k + 1);
    for (std::size_t y = 0; y < heights; ++y)
      scratch[y] = next[y] * t.site_weight(k + 1, static_cast<int>(y));
    auto out = bwd(k);
    detail::pull_back(spec.step, scratch, out);
    const double m = detail::normalize_max(out);
    if (m == 0.0) throw empty();
    t.backward_log_[static_cast<std::size_t>(k)] = t.backward_log_[static_cast<std::size_t>(k) + 1] +
                                                   std::log(m);
  }

  const double root = t.backward(0)[static_cast<std::size_t>(spec.start)];
  if (!(root > 0.0)) throw empty();
  t.log_z_ = std::log(root) + t.backward_log_[0];

  if (options.check_truncation) {
    const int cut = spec.truncation - spec.buffer();
    for (int k = 0; k <= n_steps; ++k) {
      const auto f = t.forward(k);
      const auto b = t.backward(k);
      double total = 0.0, tail = 0.0;
      for (std::size_t x = heights; x-- > 0;) {
        const double w = f[x] * b[x];
        total += w;
        if (static_cast<int>(x) > cut) tail += w;
      }
      if (tail >= spec.tail_tolerance * total)
        throw Error(Errc::truncation_overflow,
                    "marginal " + std::to_string(k) + " puts " + std::to_string(tail / total) +
                        " above K - buffer for spec " + spec.hash() + "; raise K");
    }
  }
  return t;
}

TransferTables build_tables_auto(BridgeSpec spec, int retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      return build_tables(spec);
    } catch (const Error& e) {
      if (e.code() != Errc::truncation_overflow || attempt >= retries) throw;
      spec.truncation *= 2;
    }
  }
}

double partition_ratio(const BridgeSpec& tilted, const BridgeSpec& untilted, const BuildOptions& options) {
  BridgeSpec probe = tilted;
  probe.lambda = untilted.lambda;
  if (!(probe == untilted))
    throw Error(Errc::spec_mismatch, "specs must differ only in lambda");
  if (untilted.lambda != 0.0)
    throw Error(Errc::spec_mismatch, "reference spec must have lambda = 0");
  const auto a = build_tables(tilted, options);
  const auto b = build_tables(untilted, options);
  return std::min(1.0, std::exp(a.log_partition() - b.log_partition()));
}

// ---------------------------------------------------------------------------

double HeightMarginal::mean() const {
  double s = 0.0;
  for (std::size_t x = 0; x < pmf.size(); ++x) s += static_cast<double>(x) * pmf[x];
  return s;
}

double HeightMarginal::moment(double power) const {
  double s = 0.0;
  for (std::size_t x = 1; x < pmf.size(); ++x) s += std::pow(static_cast<double>(x), power) * pmf[x];
  return s;
}

HeightMarginal marginal(const TransferTables& tables, int k) {
  if (k < 0 || k > tables.length())
    throw Error(Errc::invalid_parameter, "marginal index out of range");
  HeightMarginal m;
  m.index = k;
  const auto f = tables.forward(k);
  const auto b = tables.backward(k);
  m.pmf.resize(f.size());
  double total = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) total += (m.pmf[x] = f[x] * b[x]);
  for (double& p : m.pmf) p /= total;
  return m;
}

double tail_probability(const TransferTables& tables, int k, double threshold) {
  if (!(threshold >= 0.0)) throw Error(Errc::invalid_parameter, "threshold must be >= 0");
  const auto& spec = tables.spec();
  if (threshold > spec.truncation - spec.buffer())
    throw Error(Errc::threshold_beyond_truncation,
                "threshold " + std::to_string(threshold) + " exceeds K - buffer = " +
                    std::to_string(spec.truncation - spec.buffer()));
  const auto m = marginal(tables, k);
  double tail = 0.0;
  for (std::size_t x = m.pmf.size(); x-- > 0 && static_cast<double>(x) > threshold;)
    tail += m.pmf[x];
  return tail;
}

std::vector<double> covariance_row(const TransferTables& tables, int i, int j_last) {
  const int n = tables.length();
  if (i > j_last) throw Error(Errc::index_order, "covariance needs i <= j");
  if (i <= 0 || j_last >= n) throw Error(Errc::invalid_parameter, "covariance needs 0 < i <= j < N");
  const auto& spec = tables.spec();
  const auto heights = static_cast<std::size_t>(tables.heights());

  std::vector<double> means(static_cast<std::size_t>(j_last - i) + 1);
  for (int j = i; j <= j_last; ++j) means[static_cast<std::size_t>(j - i)] = marginal(tables, j).mean();

  std::vector<double> u(heights), next(heights);
  const auto f = tables.forward(i);
  for (std::size_t x = 0; x < heights; ++x) u[x] = f[x] * static_cast<double>(x);
  double log_u = tables.forward_log_scale(i) + std::log(detail::normalize_max(u));

  std::vector<double> out;
  out.reserve(means.size());
  for (int j = i;; ++j) {
    const auto b = tables.backward(j);
    double s = 0.0;
    for (std::size_t y = 0; y < heights; ++y) s += u[y] * static_cast<double>(y) * b[y];
    const double second = s * std::exp(log_u + tables.backward_log_scale(j) - tables.log_partition());
    out.push_back(second - means[static_cast<std::size_t>(j - i)] * means[0]);
    if (j == j_last) break;
    detail::push_forward(spec.step, u, next);
    for (std::size_t y = 0; y < heights; ++y) next[y] *= tables.site_weight(j + 1, static_cast<int>(y));
    log_u += std::log(detail::normalize_max(next));
    u.swap(next);
  }
  return out;
}

double covariance(const TransferTables& tables, int i, int j) {
  if (i > j) throw Error(Errc::index_order, "covariance needs i <= j");
  return covariance_row(tables, i, j).back();
}

// ---------------------------------------------------------------------------

AreaStatistics area_statistics(const TransferTables& tables, double delta,
                               const AreaOptions& options) {
  const auto& spec = tables.spec();
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(Errc::invalid_parameter, "delta must lie in (0, 1]");
  AreaStatistics st;
  st.delta = delta;
  if (options.scale) {
    st.scale = *options.scale;
  } else {
    if (!(spec.lambda > 0.0))
      throw Error(Errc::invalid_parameter, "area scale must be given explicitly when lambda = 0");
    st.scale = canonical_scale(spec.potential, spec.lambda);
  }
  const int n = spec.length;
  for (int k = 1; k <= n; ++k) st.mean_area += marginal(tables, k).mean();

  const double hn = st.scale * n;
  st.upper_threshold = hn / delta;
  st.lower_threshold = delta * hn;
  const double g = std::max(1.0, std::round(hn / options.target_buckets));
  st.bucket = g;
  const auto upper_bucket = static_cast<long>(std::ceil(st.upper_threshold / g));
  const auto lower_bucket = static_cast<long>(std::floor(st.lower_threshold / g));
  const long cap = upper_bucket;  // absorbing: every area >= threshold lands here
  const auto buckets = static_cast<std::size_t>(cap) + 1;
  const auto heights = static_cast<std::size_t>(tables.heights());
  const double work = static_cast<double>(heights) * n * static_cast<double>(buckets);
  if (work > options.work_budget)
    throw Error(Errc::area_dp_budget, "area DP needs " + std::to_string(work) +
                                          " cell updates, budget " +
                                          std::to_string(options.work_budget));

  std::vector<double> cur(heights * buckets, 0.0), next(heights * buckets, 0.0);
  cur[static_cast<std::size_t>(spec.start) * buckets] = 1.0;
  const auto p = spec.step.dense();
  const int lo = spec.step.min_jump();
  for (int k = 1; k <= n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < heights; ++x) {
      const double* row = cur.data() + x * buckets;
      if (std::all_of(row, row + buckets, [](double v) { return v == 0.0; })) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const long y = static_cast<long>(x) + lo + static_cast<long>(j);
        if (p[j] == 0.0 || y < 0 || y >= static_cast<long>(heights)) continue;
        const double wt = p[j] * tables.site_weight(k, static_cast<int>(y));
        double* dst = next.data() + static_cast<std::size_t>(y) * buckets;
        if (g == 1.0) {
          for (long c = 0; c <= cap; ++c)
            if (row[c] != 0.0) dst[std::min(c + y, cap)] += wt * row[c];
        } else {
          const double shift = static_cast<double>(y) / g;
          const long whole = static_cast<long>(std::floor(shift));
          const double frac = shift - static_cast<double>(whole);
          for (long c = 0; c <= cap; ++c) {
            if (row[c] == 0.0) continue;
            dst[std::min(c + whole, cap)] += (1.0 - frac) * wt * row[c];
            dst[std::min(c + whole + 1, cap)] += frac * wt * row[c];
          }
        }
      }
    }
    if (detail::normalize_max(next) == 0.0)
      throw Error(Errc::empty_path_space, "area DP lost all mass");
    cur.swap(next);
  }

  std::vector<double> law(buckets, 0.0);
  for (std::size_t x = 0; x < heights; ++x) {
    if (!spec.free_end() && static_cast<int>(x) != *spec.end) continue;
    for (std::size_t c = 0; c < buckets; ++c) law[c] += cur[x * buckets + c];
  }
  const double total = std::accumulate(law.begin(), law.end(), 0.0);
  for (double& q : law) q /= total;
  auto mass = [&](long from, long to) {
    double s = 0.0;
    for (long c = std::max(0L, from); c <= std::min(to, cap); ++c) s += law[static_cast<std::size_t>(c)];
    return s;
  };
  st.upper_probability = mass(upper_bucket, cap);
  st.lower_probability = mass(0, lower_bucket);
  if (g > 1.0) {
    st.upper_error = mass(upper_bucket - 1, upper_bucket - 1);
    st.lower_error = mass(lower_bucket + 1, lower_bucket + 1);
  }
  return st;
}

}  // namespace prewet
