#include "prewet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "prewet/error.hpp"
#include "prewet/kernel.hpp"

namespace prewet {

void TransferOperator::apply_right(std::span<const double> v, std::span<double> out) const {
  std::vector<double> tmp(v.size());
  for (std::size_t y = 0; y < v.size(); ++y) tmp[y] = weights[y] * v[y];
  detail::pull_back(spec.step, tmp, out);
}

void TransferOperator::apply_left(std::span<const double> v, std::span<double> out) const {
  detail::push_forward(spec.step, v, out);
  for (std::size_t y = 0; y < out.size(); ++y) out[y] *= weights[y];
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct PowerResult {
  std::vector<double> vector;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Plain power iteration with a Rayleigh-quotient eigenvalue estimate, one
// operator application per step.
template <class Apply>
PowerResult power_iterate(std::size_t n, Apply&& apply, const PowerIterationOptions& options) {
  PowerResult r;
  r.vector.assign(n, 1.0);
  std::vector<double> w(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    apply(r.vector, w);
    r.value = dot(r.vector, w) / dot(r.vector, r.vector);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(w[i] - r.value * r.vector[i]));
    r.residual = res / (std::abs(r.value) * max_abs(r.vector));
    r.iterations = it;
    const double m = detail::normalize_max(w);
    if (m == 0.0) {
      r.value = 0.0;
      return r;
    }
    r.vector.swap(w);
    if (r.residual < options.tolerance) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

}  // namespace

TransferOperator build_operator(const BridgeSpec& spec, const PowerIterationOptions& options) {
  if (!(spec.lambda >= 0.0) || spec.truncation < 0)
    throw Error(Errc::invalid_parameter, "operator needs lambda >= 0 and K >= 0");
  TransferOperator op;
  op.spec = spec;
  op.substochastic_flag = spec.lambda == 0.0;
  op.weights = detail::site_weights(spec.potential, spec.lambda, spec.truncation);
  const auto n = static_cast<std::size_t>(spec.truncation) + 1;

  auto right = power_iterate(
      n, [&](std::span<const double> v, std::span<double> out) { op.apply_right(v, out); }, options);
  auto left = power_iterate(
      n, [&](std::span<const double> v, std::span<double> out) { op.apply_left(v, out); }, options);

  op.eigenvalue = right.value;
  op.right = std::move(right.vector);
  op.left = std::move(left.vector);
  op.iterations = std::max(right.iterations, left.iterations);
  op.converged = right.converged && left.converged;
  if (!(op.eigenvalue > 0.0))
    throw Error(Errc::no_convergence, "kernel has no positive Perron root for spec " + spec.hash());

  const double left_sum = std::accumulate(op.left.begin(), op.left.end(), 0.0);
  for (double& x : op.left) x /= left_sum;
  const double pairing = dot(op.left, op.right);
  for (double& x : op.right) x /= pairing;

  // final residuals against the normalized pair
  std::vector<double> tmp(n);
  op.apply_right(op.right, tmp);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(tmp[i] - op.eigenvalue * op.right[i]));
  op.right_residual = res / (op.eigenvalue * max_abs(op.right));
  op.apply_left(op.left, tmp);
  res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(tmp[i] - op.eigenvalue * op.left[i]));
  op.left_residual = res / (op.eigenvalue * max_abs(op.left));

  if (!op.converged && options.throw_on_failure)
    throw Error(Errc::no_convergence,
                "Perron iteration stopped after " + std::to_string(op.iterations) +
                    " steps with residual " +
                    std::to_string(std::max(right.residual, left.residual)) + " for spec " +
                    spec.hash());
  return op;
}

StationaryLaws stationary(const TransferOperator& op) {
  StationaryLaws s;
  s.endpoint = op.left;
  const double total = std::accumulate(s.endpoint.begin(), s.endpoint.end(), 0.0);
  for (double& x : s.endpoint) x /= total;
  s.bulk.resize(op.left.size());
  double bulk_total = 0.0;
  for (std::size_t x = 0; x < s.bulk.size(); ++x) bulk_total += (s.bulk[x] = op.left[x] * op.right[x]);
  for (double& x : s.bulk) x /= bulk_total;
  return s;
}

GapEstimate spectral_gap(const TransferOperator& op, const PowerIterationOptions& options) {
  GapEstimate g;
  const auto n = op.right.size();
  if (n <= 1) return g;

  auto deflate = [&](std::span<double> v) {
    const double c = dot(op.left, v);
    for (std::size_t i = 0; i < n; ++i) v[i] -= c * op.right[i];
  };
  auto apply = [&](std::span<const double> v, std::span<double> out) {
    op.apply_right(v, out);
    deflate(out);
  };

  std::vector<double> v(n), w(n), w2(n);
  for (std::size_t x = 0; x < n; ++x)
    v[x] = static_cast<double>(x) + 0.25 * std::sin(1.7 * static_cast<double>(x));
  deflate(v);
  if (detail::normalize_max(v) == 0.0) v[0] = 1.0;

  double value = 0.0;
  g.converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    apply(v, w);
    value = dot(v, w) / dot(v, v);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(w[i] - value * v[i]));
    g.iterations = it;
    if (detail::normalize_max(w) == 0.0) {
      value = 0.0;
      g.converged = true;
      break;
    }
    v.swap(w);
    if (res <= options.tolerance * std::abs(value)) {
      g.converged = true;
      break;
    }
  }
  if (!g.converged) {
    // complex or sign-alternating pair: two-step modulus
    apply(v, w);
    apply(w, w2);
    value = std::sqrt(max_abs(w2) / max_abs(v));
  }
  g.second_modulus = std::abs(value);
  g.gap = 1.0 - g.second_modulus / op.eigenvalue;
  if (!g.converged && options.throw_on_failure)
    throw Error(Errc::no_convergence,
                "deflated iteration did not converge; gap estimate " + std::to_string(g.gap));
  return g;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<std::pair<int, double>> tv_relaxation(const TransferOperator& op,
                                                  std::span<const double> initial, int n_max) {
  if (initial.size() != op.left.size())
    throw Error(Errc::invalid_parameter, "initial law has the wrong size");
  const auto pi = stationary(op).endpoint;
  std::vector<double> mu(initial.begin(), initial.end()), next(mu.size());
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  for (double& x : mu) x /= total;
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int step = 0;; ++step) {
    out.emplace_back(step, total_variation(mu, pi));
    if (step == n_max) break;
    op.apply_left(mu, next);
    const double s = std::accumulate(next.begin(), next.end(), 0.0);
    for (double& x : next) x /= s;
    mu.swap(next);
  }
  return out;
}

std::vector<std::pair<int, double>> tv_relaxation(const TransferOperator& op, int start, int n_max) {
  if (start < 0 || start >= op.heights())
    throw Error(Errc::invalid_parameter, "start height must lie in [0, K]");
  std::vector<double> delta(op.left.size(), 0.0);
  delta[static_cast<std::size_t>(start)] = 1.0;
  return tv_relaxation(op, delta, n_max);
}

}  // namespace prewet
