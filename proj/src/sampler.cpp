#include "prewet/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prewet/error.hpp"
#include "prewet/kernel.hpp"

namespace prewet {

namespace {

// Inverse-CDF draw from unnormalized non-negative weights.
int draw(const std::vector<double>& w, double total, Rng& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;  // u landed in the rounding gap at the top
}

}  // namespace

PathSample exact_sample(const TransferTables& tables, Rng& rng) {
  const auto& spec = tables.spec();
  const auto& step = spec.step;
  PathSample s;
  s.seed = rng.seed();
  s.stream = rng.stream();
  s.heights.resize(static_cast<std::size_t>(spec.length) + 1);
  s.heights[0] = spec.start;
  std::vector<double> w(static_cast<std::size_t>(step.width()));
  for (int k = 0; k < spec.length; ++k) {
    const int x = s.heights[static_cast<std::size_t>(k)];
    const auto b = tables.backward(k + 1);
    double total = 0.0;
    for (int j = 0; j < step.width(); ++j) {
      const int y = x + step.min_jump() + j;
      double v = 0.0;
      if (y >= 0 && y < tables.heights())
        v = step.dense()[static_cast<std::size_t>(j)] * tables.site_weight(k + 1, y) *
            b[static_cast<std::size_t>(y)];
      total += (w[static_cast<std::size_t>(j)] = v);
    }
    if (!(total > 0.0)) throw std::logic_error("exact_sample reached a dead end");
    s.heights[static_cast<std::size_t>(k) + 1] = x + step.min_jump() + draw(w, total, rng);
  }
  return s;
}

// ---------------------------------------------------------------------------

StationaryChain::StationaryChain(const TransferOperator& op)
    : heights_(op.heights()), min_jump_(op.spec.step.min_jump()), width_(op.spec.step.width()) {
  const auto p = op.spec.step.dense();
  cumulative_.assign(static_cast<std::size_t>(heights_) * static_cast<std::size_t>(width_), 0.0);
  for (int x = 0; x < heights_; ++x) {
    double* row = cumulative_.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(width_);
    double acc = 0.0;
    for (int j = 0; j < width_; ++j) {
      const int y = x + min_jump_ + j;
      if (y >= 0 && y < heights_)
        acc += p[static_cast<std::size_t>(j)] * op.weights[static_cast<std::size_t>(y)] *
               op.right[static_cast<std::size_t>(y)];
      row[j] = acc;
    }
    if (!(acc > 0.0)) throw std::logic_error("stationary chain row without mass");
    for (int j = 0; j < width_; ++j) row[j] /= acc;
    row[width_ - 1] = 1.0;
  }
}

int StationaryChain::step(int x, Rng& rng) const {
  const double* row = cumulative_.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(width_);
  const double u = rng.uniform();
  const int j = static_cast<int>(std::upper_bound(row, row + width_, u) - row);
  return x + min_jump_ + std::min(j, width_ - 1);
}

std::vector<double> StationaryChain::row(int x) const {
  const double* row = cumulative_.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(width_);
  std::vector<double> out(static_cast<std::size_t>(width_));
  double prev = 0.0;
  for (int j = 0; j < width_; ++j) {
    out[static_cast<std::size_t>(j)] = row[j] - prev;
    prev = row[j];
  }
  return out;
}

CouplingOutcome couple(const StationaryChain& chain, int start_x, int start_y, int horizon,
                       Rng& rng_x, Rng& rng_y, bool keep_paths) {
  if (start_x < 0 || start_y < 0 || start_x >= chain.heights() || start_y >= chain.heights())
    throw Error(Errc::invalid_parameter, "coupling starts must lie in [0, K]");
  CouplingOutcome out;
  int x = start_x, y = start_y;
  if (keep_paths) {
    out.x_path.push_back(x);
    out.y_path.push_back(y);
  }
  for (int j = 0;; ++j) {
    if (x == y) {
      out.meet_time = j;
      break;
    }
    if (j == horizon) break;
    x = chain.step(x, rng_x);
    y = chain.step(y, rng_y);
    if (keep_paths) {
      out.x_path.push_back(x);
      out.y_path.push_back(y);
    }
  }
  return out;
}

CouplingOutcome couple(const BridgeSpec& spec, int other_start, int horizon, Rng& rng_x, Rng& rng_y) {
  const auto op = build_operator(spec);
  const StationaryChain chain(op);
  return couple(chain, spec.start, other_start, horizon, rng_x, rng_y, true);
}

CouplingOutcome couple_bridges(const TransferTables& x_tables, const TransferTables& y_tables,
                               Rng& rng_x, Rng& rng_y) {
  if (x_tables.length() != y_tables.length())
    throw Error(Errc::spec_mismatch, "coupled bridges must have equal length");
  CouplingOutcome out;
  out.x_path = exact_sample(x_tables, rng_x).heights;
  out.y_path = exact_sample(y_tables, rng_y).heights;
  for (std::size_t j = 0; j < out.x_path.size(); ++j) {
    if (out.x_path[j] == out.y_path[j]) {
      out.meet_time = static_cast<int>(j);
      break;
    }
  }
  return out;
}

std::vector<int> spliced_path(const CouplingOutcome& outcome) {
  std::vector<int> path = outcome.x_path;
  if (outcome.meet_time)
    for (std::size_t j = static_cast<std::size_t>(*outcome.meet_time); j < path.size(); ++j)
      path[j] = outcome.y_path[j];
  return path;
}

// ---------------------------------------------------------------------------

std::vector<double> heat_bath_conditional(const BridgeSpec& spec, int left, int right) {
  std::vector<double> w(static_cast<std::size_t>(spec.truncation) + 1, 0.0);
  const auto& p = spec.step;
  const int lo = std::max({0, left + p.min_jump(), right - p.max_jump()});
  const int hi = std::min({spec.truncation, left + p.max_jump(), right - p.min_jump()});
  double total = 0.0;
  for (int x = lo; x <= hi; ++x)
    total += (w[static_cast<std::size_t>(x)] =
                  p(x - left) * p(right - x) * std::exp(-spec.lambda * spec.potential(x)));
  if (total > 0.0)
    for (double& v : w) v /= total;
  return w;
}

McmcRun mcmc_heatbath(const BridgeSpec& spec, int sweeps, Rng& rng) {
  spec.validate();
  const int n = spec.length;
  const auto& p = spec.step;
  const int up = std::max(p.max_jump(), 0);
  const int down = std::max(-p.min_jump(), 0);
  const int flat = std::max(spec.start, spec.end.value_or(spec.start));

  McmcRun run;
  auto& path = run.final_state.heights;
  path.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    int h = std::min(flat, spec.start + i * up);
    if (spec.end) h = std::min(h, *spec.end + (n - i) * down);
    path[static_cast<std::size_t>(i)] = std::min(h, spec.truncation);
  }
  path[0] = spec.start;
  if (spec.end) path[static_cast<std::size_t>(n)] = *spec.end;
  for (int i = 0; i < n; ++i)
    if (p(path[static_cast<std::size_t>(i) + 1] - path[static_cast<std::size_t>(i)]) <= 0.0)
      throw Error(Errc::invalid_parameter, "no admissible initial path for heat-bath sampler");
  run.final_state.seed = rng.seed();
  run.final_state.stream = rng.stream();

  const auto weights = detail::site_weights(spec.potential, spec.lambda, spec.truncation);
  std::vector<double> w(static_cast<std::size_t>(p.width()) * 2 + 1);
  const int last_site = spec.end ? n - 1 : n;
  run.observable.reserve(static_cast<std::size_t>(sweeps));
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 1; i <= last_site; ++i) {
      const int left = path[static_cast<std::size_t>(i) - 1];
      int lo = std::max(0, left + p.min_jump());
      int hi = std::min(spec.truncation, left + p.max_jump());
      const bool has_right = i < n;
      const int right = has_right ? path[static_cast<std::size_t>(i) + 1] : 0;
      if (has_right) {
        lo = std::max(lo, right - p.max_jump());
        hi = std::min(hi, right - p.min_jump());
      }
      w.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
      double total = 0.0;
      for (int x = lo; x <= hi; ++x) {
        double v = p(x - left) * weights[static_cast<std::size_t>(x)];
        if (has_right) v *= p(right - x);
        total += (w[static_cast<std::size_t>(x - lo)] = v);
      }
      if (total > 0.0) path[static_cast<std::size_t>(i)] = lo + draw(w, total, rng);
    }
    run.observable.push_back(path[static_cast<std::size_t>(n / 2)]);
  }
  return run;
}

}  // namespace prewet
