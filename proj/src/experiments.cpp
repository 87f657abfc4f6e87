#include "prewet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>
#include <tuple>

#include "prewet/error.hpp"
#include "prewet/rng.hpp"
#include "prewet/sampler.hpp"
#include "prewet/spectral.hpp"
#include "prewet/stats.hpp"
#include "prewet/transfer.hpp"

namespace prewet::experiments {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string tagged(const char* name, const char* key, double v) {
  return std::string(name) + "[" + key + "=" + fmt(v) + "]";
}

std::vector<double> positive_lambdas(const SweepConfig& c) {
  std::vector<double> out;
  for (double l : c.lambdas)
    if (l > 0.0) out.push_back(l);
  return out;
}

BridgeSpec bridge(const SweepConfig& c, double lambda, int length, int start = 0,
                  std::optional<int> end = 0) {
  BridgeSpec s;
  s.step = c.step;
  s.potential = c.potential;
  s.lambda = lambda;
  s.length = length;
  s.start = start;
  s.end = end;
  s.truncation = default_truncation(c.step, c.potential, lambda, length, start, end);
  return s;
}

FitResult make_fit(std::string quantity, double lambda, const std::vector<double>& x,
                   const std::vector<double>& y) {
  FitResult f;
  f.quantity = std::move(quantity);
  f.lambda = lambda;
  for (std::size_t i = 0; i < x.size(); ++i) f.points.emplace_back(x[i], y[i]);
  if (x.size() < 2) {
    f.applicable = false;
    f.note = "fewer than two usable points";
    return f;
  }
  const LinearFit lf = fit_line(x, y);
  f.exponent = lf.slope;
  f.stderr_ = lf.slope_stderr;
  f.intercept = lf.intercept;
  f.r2 = lf.r2;
  return f;
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

void band_check(Report& r, const SweepConfig& c, const FitResult& f) {
  if (!c.band || !f.applicable) return;
  const bool ok = f.exponent >= c.band->first && f.exponent <= c.band->second;
  r.check(f.quantity + (f.lambda > 0.0 ? tagged("", "lambda", f.lambda) : std::string()) + " in band",
          ok,
          fmt(f.exponent) + " in [" + fmt(c.band->first) + ", " + fmt(c.band->second) + "]");
}

}  // namespace

void SweepConfig::validate() const {
  if (lambdas.empty()) throw Error(Errc::invalid_parameter, "lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!std::isfinite(lambdas[i]) || lambdas[i] < 0.0)
      throw Error(Errc::invalid_parameter, "lambda values must be finite and >= 0");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
      throw Error(Errc::invalid_parameter, "lambda grid must be strictly decreasing");
  }
  if (!(length_multiplier >= min_length_multiplier))
    throw Error(Errc::invalid_parameter, "length multiplier " + fmt(length_multiplier) +
                                             " below the minimum " + fmt(min_length_multiplier));
  auto positive = [](const std::vector<double>& g, const char* what) {
    if (g.empty()) throw Error(Errc::invalid_parameter, std::string(what) + " is empty");
    for (double v : g)
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(Errc::invalid_parameter, std::string(what) + " entries must be positive");
  };
  positive(tail_grid, "tail grid");
  positive(length_grid, "length grid");
  positive(area_grid, "area grid");
  if (!(relaxation_multiplier > 0.0))
    throw Error(Errc::invalid_parameter, "relaxation multiplier must be positive");
  if (!(coupling_offset >= 0.0)) throw Error(Errc::invalid_parameter, "coupling offset must be >= 0");
  if (replicas < 1) throw Error(Errc::invalid_parameter, "replicas must be >= 1");
  if (jobs < 1) throw Error(Errc::invalid_parameter, "jobs must be >= 1");
  if (band && !(band->first <= band->second))
    throw Error(Errc::invalid_parameter, "band must be ordered");
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const FitResult* Report::fit(const std::string& quantity, double lambda) const {
  for (const auto& f : fits)
    if (f.quantity == quantity && f.lambda == lambda) return &f;
  return nullptr;
}

void Report::check(std::string name, bool ok, std::string detail) {
  checks.push_back({std::move(name), ok, std::move(detail)});
}

std::optional<double> scale_exponent(const Potential& potential) {
  switch (potential.kind()) {
    case Potential::Kind::linear: return -1.0 / 3.0;
    case Potential::Kind::power: return -1.0 / (2.0 + potential.beta());
    case Potential::Kind::table: return std::nullopt;
  }
  return std::nullopt;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::min(jobs, count);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int length_for(double multiplier, double scale) {
  return std::max(2, static_cast<int>(std::lround(multiplier * scale * scale)));
}

// ---------------------------------------------------------------------------

Report height_scaling(const SweepConfig& c) {
  c.validate();
  const auto lambdas = positive_lambdas(c);
  if (lambdas.size() < 4)
    throw Error(Errc::insufficient_grid, "height scaling needs at least 4 positive lambda values");
  const int n = static_cast<int>(lambdas.size());
  std::vector<double> scale(n), mean(n);
  std::vector<std::string> hashes(n);
  parallel_for(n, c.jobs, [&](int i) {
    scale[i] = canonical_scale(c.potential, lambdas[i]);
    const int len = length_for(c.length_multiplier, scale[i]);
    const auto t = build_tables_auto(bridge(c, lambdas[i], len));
    mean[i] = marginal(t, len / 2).mean();
    hashes[i] = t.spec().hash();
  });

  Report r;
  r.experiment = "scaling";
  std::vector<double> x, y;
  for (int i = 0; i < n; ++i) {
    r.rows.push_back({lambdas[i], scale[i], "mean_height", mean[i], 0.0});
    r.rows.push_back({lambdas[i], scale[i], "mean_height_over_H", mean[i] / scale[i], 0.0});
    x.push_back(std::log(lambdas[i]));
    y.push_back(std::log(mean[i]));
  }
  auto f = make_fit("height_exponent", 0.0, x, y);
  f.spec_hashes = hashes;
  if (auto ref = scale_exponent(c.potential)) f.note = "reference " + fmt(*ref);
  band_check(r, c, f);
  r.fits.push_back(std::move(f));
  return r;
}

Report tail_exponent(const SweepConfig& c) {
  c.validate();
  const int n = static_cast<int>(c.lambdas.size());
  const double t_max = *std::max_element(c.tail_grid.begin(), c.tail_grid.end());
  std::vector<std::vector<double>> probs(n);
  std::vector<double> scale(n, 0.0);
  std::vector<std::string> hashes(n);
  parallel_for(n, c.jobs, [&](int i) {
    const double lambda = c.lambdas[i];
    if (!(lambda > 0.0)) return;
    scale[i] = canonical_scale(c.potential, lambda);
    const int len = length_for(c.length_multiplier, scale[i]);
    auto spec = bridge(c, lambda, len);
    spec.truncation = std::max(spec.truncation,
                               static_cast<int>(std::ceil(2.0 * t_max * scale[i])) + spec.buffer());
    const auto t = build_tables_auto(spec);
    hashes[i] = t.spec().hash();
    for (double tv : c.tail_grid) probs[i].push_back(tail_probability(t, len / 2, tv * scale[i]));
  });

  Report r;
  r.experiment = "tails";
  std::vector<const FitResult*> fitted;
  for (int i = 0; i < n; ++i) {
    const double lambda = c.lambdas[i];
    if (!(lambda > 0.0)) {
      FitResult f;
      f.quantity = "tail_exponent";
      f.lambda = 0.0;
      f.applicable = false;
      f.note = "lambda = 0 has no localization scale; no stretched-exponential regime";
      r.fits.push_back(std::move(f));
      continue;
    }
    std::vector<double> x, y;
    for (std::size_t k = 0; k < c.tail_grid.size(); ++k) {
      const double p = probs[i][k];
      r.rows.push_back({lambda, scale[i], tagged("tail_probability", "T", c.tail_grid[k]), p, 0.0});
      if (p > 0.0 && p < 1.0) {
        x.push_back(std::log(c.tail_grid[k]));
        y.push_back(std::log(-std::log(p)));
      }
    }
    for (std::size_t k = 1; k < x.size(); ++k) {
      const double local = (y[k] - y[k - 1]) / (x[k] - x[k - 1]);
      r.rows.push_back({lambda, scale[i],
                        tagged("local_exponent", "T", std::exp(0.5 * (x[k] + x[k - 1]))), local, 0.0});
    }
    auto f = make_fit("tail_exponent", lambda, x, y);
    f.spec_hashes = {hashes[i]};
    band_check(r, c, f);
    r.fits.push_back(std::move(f));
  }
  for (const auto& f : r.fits)
    if (f.applicable) fitted.push_back(&f);
  if (fitted.size() >= 2) {
    const auto& a = *fitted[fitted.size() - 2];
    const auto& b = *fitted.back();
    const double joint = std::hypot(a.stderr_, b.stderr_);
    r.check("tail exponents agree across lambda", std::abs(a.exponent - b.exponent) <= 2.0 * joint,
            fmt(a.exponent) + " vs " + fmt(b.exponent) + ", joint stderr " + fmt(joint));
  }
  return r;
}

Report area_law(const SweepConfig& c, double delta) {
  c.validate();
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(Errc::invalid_parameter, "delta must lie in (0, 1]");
  const auto lambdas = positive_lambdas(c);
  const int n = static_cast<int>(lambdas.size());
  const int m = static_cast<int>(c.area_grid.size());
  std::vector<AreaStatistics> stats(static_cast<std::size_t>(n * m));
  std::vector<double> scale(n);
  std::vector<std::string> hashes(static_cast<std::size_t>(n * m));
  parallel_for(n * m, c.jobs, [&](int idx) {
    const int i = idx / m, j = idx % m;
    const double h = canonical_scale(c.potential, lambdas[i]);
    if (j == 0) scale[i] = h;
    const auto t = build_tables_auto(bridge(c, lambdas[i], length_for(c.area_grid[j], h)));
    hashes[idx] = t.spec().hash();
    stats[idx] = area_statistics(t, delta);
  });

  Report r;
  r.experiment = "area";
  std::vector<double> per_site;
  for (int i = 0; i < n; ++i) {
    std::vector<double> xu, yu, xl, yl;
    for (int j = 0; j < m; ++j) {
      const auto& s = stats[static_cast<std::size_t>(i * m + j)];
      const double mult = c.area_grid[j];
      const int len = length_for(mult, scale[i]);
      r.rows.push_back({lambdas[i], scale[i], tagged("mean_area_over_HN", "N/H2", mult),
                        s.mean_area / (scale[i] * len), 0.0});
      r.rows.push_back({lambdas[i], scale[i], tagged("upper_tail", "N/H2", mult),
                        s.upper_probability, s.upper_error});
      r.rows.push_back({lambdas[i], scale[i], tagged("lower_tail", "N/H2", mult),
                        s.lower_probability, s.lower_error});
      if (s.upper_probability > 0.0) {
        xu.push_back(mult);
        yu.push_back(std::log(s.upper_probability));
      }
      if (s.lower_probability > 0.0) {
        xl.push_back(mult);
        yl.push_back(std::log(s.lower_probability));
      }
    }
    const auto& last = stats[static_cast<std::size_t>(i * m + m - 1)];
    per_site.push_back(last.mean_area / (scale[i] * length_for(c.area_grid.back(), scale[i])));
    for (auto [name, x, y] : {std::tuple{"log_upper_tail_rate", &xu, &yu},
                              std::tuple{"log_lower_tail_rate", &xl, &yl}}) {
      auto f = make_fit(name, lambdas[i], *x, *y);
      for (int j = 0; j < m; ++j) f.spec_hashes.push_back(hashes[static_cast<std::size_t>(i * m + j)]);
      if (f.applicable)
        r.check(std::string(name) + tagged("", "lambda", lambdas[i]) + " negative", f.exponent < 0.0,
                "slope " + fmt(f.exponent) + " per unit N/H^2");
      r.fits.push_back(std::move(f));
    }
  }
  if (n >= 2)
    r.check("mean area per site over H stable within factor 2", spread(per_site) <= 2.0,
            "max/min " + fmt(spread(per_site)));
  return r;
}

Report correlation_length(const SweepConfig& c) {
  c.validate();
  const auto lambdas = positive_lambdas(c);
  const int n = static_cast<int>(lambdas.size());
  struct Out {
    double scale = 0, xi = 0, xi_gap = 0, gap = 0;
    FitResult fit;
    CovarianceSeries series;
  };
  std::vector<Out> out(n);
  parallel_for(n, c.jobs, [&](int i) {
    auto& o = out[i];
    o.scale = canonical_scale(c.potential, lambdas[i]);
    const double h2 = o.scale * o.scale;
    const int len = length_for(c.length_multiplier, o.scale);
    const int mid = len / 2;
    const int reach = static_cast<int>(std::lround(8.0 * h2));
    const int first = std::max(1, mid - reach / 2);
    const int last = std::min(len - 1, first + reach);
    const auto t = build_tables_auto(bridge(c, lambdas[i], len));
    const auto row = covariance_row(t, first, last);
    o.series.lambda = lambdas[i];
    std::vector<double> x, y;
    for (int j = first; j <= last; ++j) {
      const double v = row[static_cast<std::size_t>(j - first)];
      o.series.cov.push_back({{first, j}, v});
      const int dist = j - first;
      if (dist >= 2.0 * h2 && dist <= 8.0 * h2 && v > 0.0) {
        x.push_back(dist);
        y.push_back(std::log(v));
      }
    }
    o.fit = make_fit("covariance_decay", lambdas[i], x, y);
    o.fit.spec_hashes = {t.spec().hash()};
    o.xi = o.fit.applicable && o.fit.exponent < 0.0 ? -1.0 / o.fit.exponent
                                                    : std::numeric_limits<double>::infinity();
    const auto op = build_operator(t.spec());
    o.gap = spectral_gap(op).gap;
    o.xi_gap = -1.0 / std::log1p(-o.gap);
  });

  Report r;
  r.experiment = "correlations";
  std::vector<double> ratio;
  for (int i = 0; i < n; ++i) {
    auto& o = out[i];
    const double h2 = o.scale * o.scale;
    r.rows.push_back({lambdas[i], o.scale, "xi", o.xi, o.fit.stderr_ * o.xi * o.xi});
    r.rows.push_back({lambdas[i], o.scale, "xi_over_H2", o.xi / h2, 0.0});
    r.rows.push_back({lambdas[i], o.scale, "xi_gap", o.xi_gap, 0.0});
    r.rows.push_back({lambdas[i], o.scale, "gap_times_H2", o.gap * h2, 0.0});
    const double rel = std::abs(o.xi / o.xi_gap - 1.0);
    r.check("xi matches spectral gap" + tagged("", "lambda", lambdas[i]), rel <= 0.1,
            "relative difference " + fmt(rel));
    ratio.push_back(o.xi / h2);
    r.fits.push_back(std::move(o.fit));
    r.covariances.push_back(std::move(o.series));
  }
  if (n >= 2)
    r.check("xi / H^2 stable within factor 2", spread(ratio) <= 2.0, "max/min " + fmt(spread(ratio)));
  return r;
}

Report relaxation(const SweepConfig& c) {
  c.validate();
  const auto lambdas = positive_lambdas(c);
  const int n = static_cast<int>(lambdas.size());
  std::vector<double> scale(n), gap(n);
  std::vector<TvSeries> series(n);
  std::vector<std::string> hashes(n);
  parallel_for(n, c.jobs, [&](int i) {
    scale[i] = canonical_scale(c.potential, lambdas[i]);
    const int n_max = length_for(c.relaxation_multiplier, scale[i]);
    const auto spec = bridge(c, lambdas[i], n_max, 0, std::nullopt);
    const auto op = build_operator(spec);
    hashes[i] = spec.hash();
    gap[i] = spectral_gap(op).gap;
    series[i] = {lambdas[i], tv_relaxation(op, 0, n_max)};
  });

  Report r;
  r.experiment = "relaxation";
  std::vector<double> scaled;
  for (int i = 0; i < n; ++i) {
    const double h2 = scale[i] * scale[i];
    const auto& tv = series[i].tv;
    const int n_max = tv.back().first;
    std::vector<double> x, y;
    for (auto [k, d] : tv)
      if (2 * k >= n_max && d > 0.0) {
        x.push_back(k);
        y.push_back(std::log(d));
      }
    auto f = make_fit("tv_decay", lambdas[i], x, y);
    f.spec_hashes = {hashes[i]};
    const double rate = -f.exponent;
    r.rows.push_back({lambdas[i], scale[i], "tv_rate", rate, f.stderr_});
    r.rows.push_back({lambdas[i], scale[i], "tv_rate_times_H2", rate * h2, f.stderr_ * h2});
    r.rows.push_back({lambdas[i], scale[i], "gap_times_H2", gap[i] * h2, 0.0});
    r.check("log TV linear in N" + tagged("", "lambda", lambdas[i]), f.applicable && f.r2 >= 0.99,
            "R^2 " + fmt(f.r2));
    scaled.push_back(rate * h2);
    r.fits.push_back(std::move(f));
    r.tv.push_back(std::move(series[i]));
  }
  if (n >= 2)
    r.check("rate * H^2 stable within factor 2", spread(scaled) <= 2.0,
            "max/min " + fmt(spread(scaled)));
  return r;
}

Report coupling(const SweepConfig& c) {
  c.validate();
  const auto lambdas = positive_lambdas(c);
  if (lambdas.empty()) throw Error(Errc::invalid_parameter, "coupling needs a positive lambda");
  Report r;
  r.experiment = "couple";
  std::vector<double> scaled;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    const double lambda = lambdas[li];
    const double h = canonical_scale(c.potential, lambda);
    const double h2 = h * h;
    const int y0 = static_cast<int>(std::lround(c.coupling_offset * h));
    const int longest = length_for(*std::max_element(c.length_grid.begin(), c.length_grid.end()), h);
    const auto spec = bridge(c, lambda, longest, 0, std::nullopt);
    const auto op = build_operator(spec);
    const StationaryChain chain(op);
    if (y0 >= chain.heights()) throw Error(Errc::invalid_parameter, "coupling start above truncation");

    std::vector<double> x, y, var_y;
    for (std::size_t pi = 0; pi < c.length_grid.size(); ++pi) {
      const int len = length_for(c.length_grid[pi], h);
      const int chunks = std::max(1, std::min(c.jobs, c.replicas));
      std::vector<long> misses(static_cast<std::size_t>(chunks), 0);
      parallel_for(chunks, c.jobs, [&](int ch) {
        const long lo = static_cast<long>(c.replicas) * ch / chunks;
        const long hi = static_cast<long>(c.replicas) * (ch + 1) / chunks;
        for (long rep = lo; rep < hi; ++rep) {
          const std::uint64_t base = (static_cast<std::uint64_t>(li) << 48) |
                                     (static_cast<std::uint64_t>(pi) << 36) |
                                     (static_cast<std::uint64_t>(rep) << 1);
          Rng rx(c.seed, base), ry(c.seed, base | 1u);
          if (!couple(chain, 0, y0, len, rx, ry).meet_time) ++misses[static_cast<std::size_t>(ch)];
        }
      });
      long miss = 0;
      for (long v : misses) miss += v;
      const double p = static_cast<double>(miss) / c.replicas;
      const double se = std::sqrt(p * (1.0 - p) / c.replicas);
      r.coupling.push_back({lambda, len, p, se});
      r.rows.push_back({lambda, h, tagged("p_no_meet", "N", len), p, se});
      if (miss > 0) {
        x.push_back(len / h2);
        y.push_back(std::log(p));
        var_y.push_back((1.0 - p) / (p * c.replicas));
      }
    }
    auto f = make_fit("log_no_meet_rate", lambda, x, y);
    f.seeds = {c.seed};
    f.spec_hashes = {spec.hash()};
    if (f.applicable) {
      // Slope error from the binomial noise of each point, propagated through OLS.
      double mx = 0.0;
      for (double v : x) mx += v;
      mx /= static_cast<double>(x.size());
      double sxx = 0.0;
      for (double v : x) sxx += (v - mx) * (v - mx);
      double var = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) var += (x[k] - mx) * (x[k] - mx) * var_y[k];
      f.stderr_ = std::max(f.stderr_, std::sqrt(var) / sxx);
      const double z = f.stderr_ > 0.0 ? f.exponent / f.stderr_ : -std::numeric_limits<double>::infinity();
      r.check("no-meet slope negative at 4 sigma" + tagged("", "lambda", lambda),
              f.exponent < 0.0 && z <= -4.0, "slope " + fmt(f.exponent) + ", z " + fmt(z));
      r.rows.push_back({lambda, h, "no_meet_rate_times_H2", -f.exponent, f.stderr_});
      scaled.push_back(-f.exponent);
    } else {
      r.check("no-meet slope negative at 4 sigma" + tagged("", "lambda", lambda), false,
              "fewer than two grid points with surviving pairs");
    }
    r.fits.push_back(std::move(f));
  }
  if (scaled.size() >= 2)
    r.check("rate * H^2 stable within factor 2", spread(scaled) <= 2.0,
            "max/min " + fmt(spread(scaled)));
  return r;
}

Report moment_scaling(const SweepConfig& c, double p) {
  c.validate();
  if (!(p > 1.0 && p < 21.0 / 8.0))
    throw Error(Errc::precondition, "moment order p must satisfy 1 < p < 21/8, got " + fmt(p));
  const auto lambdas = positive_lambdas(c);
  const int n = static_cast<int>(lambdas.size());
  std::vector<double> scale(n), moment(n);
  std::vector<std::string> hashes(n);
  parallel_for(n, c.jobs, [&](int i) {
    scale[i] = canonical_scale(c.potential, lambdas[i]);
    const int len = length_for(c.length_multiplier, scale[i]);
    const auto t = build_tables_auto(bridge(c, lambdas[i], len));
    hashes[i] = t.spec().hash();
    moment[i] = marginal(t, len / 2).moment(2.0 * p);
  });
  Report r;
  r.experiment = "moments";
  std::vector<double> ratio, x, y;
  for (int i = 0; i < n; ++i) {
    const double rv = moment[i] / std::pow(scale[i], 2.0 * p + 1.0);
    r.rows.push_back({lambdas[i], scale[i], tagged("moment", "2p", 2.0 * p), moment[i], 0.0});
    r.rows.push_back({lambdas[i], scale[i], tagged("moment_over_H^(2p+1)", "2p", 2.0 * p), rv, 0.0});
    ratio.push_back(rv);
    x.push_back(std::log(scale[i]));
    y.push_back(std::log(moment[i]));
  }
  auto f = make_fit("moment_exponent_in_H", 0.0, x, y);
  f.spec_hashes = hashes;
  r.fits.push_back(std::move(f));
  if (n >= 1)
    r.check("moment / H^(2p+1) max/min below 4", spread(ratio) < 4.0,
            "max/min " + fmt(spread(ratio)));
  return r;
}

Report max_height_floor(const SweepConfig& c, double delta) {
  c.validate();
  if (!(delta > 0.0)) throw Error(Errc::invalid_parameter, "delta must be positive");
  const auto lambdas = positive_lambdas(c);
  const int n = static_cast<int>(lambdas.size());
  const int m = static_cast<int>(c.length_grid.size());
  std::vector<double> log_p(static_cast<std::size_t>(n * m));
  std::vector<double> scale(n);
  parallel_for(n * m, c.jobs, [&](int idx) {
    const int i = idx / m, j = idx % m;
    const double h = canonical_scale(c.potential, lambdas[i]);
    if (j == 0) scale[i] = h;
    const auto full = build_tables_auto(bridge(c, lambdas[i], length_for(c.length_grid[j], h)));
    auto ceiling = full.spec();
    ceiling.truncation = static_cast<int>(std::floor(delta * h));
    try {
      const auto capped = build_tables(ceiling, {.check_truncation = false});
      log_p[static_cast<std::size_t>(idx)] = capped.log_partition() - full.log_partition();
    } catch (const Error& e) {
      if (e.code() != Errc::empty_path_space) throw;
      log_p[static_cast<std::size_t>(idx)] = -std::numeric_limits<double>::infinity();
    }
  });

  Report r;
  r.experiment = "max_height_floor";
  std::vector<double> rate_h2;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x, y;
    for (int j = 0; j < m; ++j) {
      const int len = length_for(c.length_grid[j], scale[i]);
      const double lp = log_p[static_cast<std::size_t>(i * m + j)];
      r.rows.push_back({lambdas[i], scale[i], tagged("log_prob_max_below", "N", len), lp, 0.0});
      if (std::isfinite(lp)) {
        x.push_back(len);
        y.push_back(lp);
      }
    }
    auto f = make_fit("log_prob_max_below_rate", lambdas[i], x, y);
    if (f.applicable) {
      r.check("max-height floor decays" + tagged("", "lambda", lambdas[i]), f.exponent < 0.0,
              "slope " + fmt(f.exponent) + " per step");
      rate_h2.push_back(-f.exponent * scale[i] * scale[i]);
      r.rows.push_back({lambdas[i], scale[i], "rate_times_H2", rate_h2.back(), f.stderr_});
    }
    r.fits.push_back(std::move(f));
  }
  if (rate_h2.size() >= 2)
    r.check("rate scales as H^-2 within factor 2", spread(rate_h2) <= 2.0,
            "max/min " + fmt(spread(rate_h2)));
  return r;
}

}  // namespace prewet::experiments
