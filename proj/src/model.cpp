#include "prewet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "prewet/error.hpp"

namespace prewet {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "InvalidParameter";
    case Errc::non_finite_objective: return "NonFiniteObjective";
    case Errc::bracket_failure: return "BracketFailure";
    case Errc::empty_support: return "EmptySupport";
    case Errc::empty_path_space: return "EmptyPathSpace";
    case Errc::truncation_overflow: return "TruncationOverflow";
    case Errc::spec_mismatch: return "SpecMismatch";
    case Errc::threshold_beyond_truncation: return "ThresholdBeyondTruncation";
    case Errc::index_order: return "IndexOrder";
    case Errc::area_dp_budget: return "AreaDPBudget";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::null_event: return "NullEvent";
    case Errc::insufficient_grid: return "InsufficientGrid";
    case Errc::precondition: return "PreconditionViolated";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::vector<double> convolve(const std::vector<double>& a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace

std::optional<int> strict_aperiodicity_constant(std::span<const double> dense, int min_jump,
                                                int max_n) {
  constexpr int kWindow = 5;
  std::vector<bool> ok;
  ok.reserve(static_cast<std::size_t>(max_n + kWindow));
  std::vector<double> power(dense.begin(), dense.end());
  int offset = min_jump;
  for (int n = 1; n <= max_n + kWindow; ++n) {
    if (n > 1) {
      power = convolve(power, dense);
      offset += min_jump;
    }
    auto at = [&](int x) {
      const int i = x - offset;
      return (i < 0 || i >= static_cast<int>(power.size())) ? 0.0
                                                            : power[static_cast<std::size_t>(i)];
    };
    ok.push_back(at(-1) > 0.0 && at(0) > 0.0 && at(1) > 0.0);
  }
  for (int a = 1; a <= max_n; ++a) {
    bool all = true;
    for (int n = a; n <= a + kWindow; ++n) all = all && ok[static_cast<std::size_t>(n - 1)];
    if (all) return a;
  }
  return std::nullopt;
}

StepDistribution StepDistribution::from_pmf(const std::vector<int>& support,
                                            const std::vector<double>& probs, std::string name) {
  if (support.empty() || support.size() != probs.size())
    throw Error(Errc::invalid_parameter, "support and probs must be non-empty and equally sized");
  std::vector<std::pair<int, double>> entries;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
      throw Error(Errc::invalid_parameter, "negative or non-finite probability");
    entries.emplace_back(support[i], probs[i]);
  }
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].first == entries[i - 1].first)
      throw Error(Errc::invalid_parameter, "duplicate jump in support");
  // trim zero-mass ends
  auto first = std::find_if(entries.begin(), entries.end(), [](auto& e) { return e.second > 0; });
  auto last = std::find_if(entries.rbegin(), entries.rend(), [](auto& e) { return e.second > 0; });
  if (first == entries.end()) throw Error(Errc::invalid_parameter, "all probabilities are zero");

  StepDistribution d;
  d.name_ = std::move(name);
  d.min_jump_ = first->first;
  const int hi = last->first;
  d.dense_.assign(static_cast<std::size_t>(hi - d.min_jump_ + 1), 0.0);
  for (auto it = first; it != entries.end() && it->first <= hi; ++it)
    d.dense_[static_cast<std::size_t>(it->first - d.min_jump_)] = it->second;

  double total = 0.0, mean = 0.0;
  for (int k = d.min_jump_; k <= hi; ++k) {
    total += d(k);
    mean += k * d(k);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(Errc::invalid_parameter, "probabilities sum to " + std::to_string(total));
  if (std::abs(mean) > 1e-12)
    throw Error(Errc::invalid_parameter, "mean is not zero: " + std::to_string(mean));
  double var = 0.0;
  for (int k = d.min_jump_; k <= hi; ++k) var += (k - mean) * (k - mean) * d(k);
  if (!(var > 0.0) || !std::isfinite(var))
    throw Error(Errc::invalid_parameter, "variance must be finite and positive");
  d.mean_ = mean;
  d.variance_ = var;

  const auto a = strict_aperiodicity_constant(d.dense_, d.min_jump_);
  if (!a) throw Error(Errc::invalid_parameter, "step law is not strictly aperiodic");
  d.aperiodicity_ = *a;
  return d;
}

StepDistribution StepDistribution::lazy_simple() {
  return from_pmf({-1, 0, 1}, {0.25, 0.5, 0.25}, "lazy");
}

namespace {

// Symmetric law from unnormalized weights w(|x|), x = 0..x_max.
StepDistribution symmetric_from_weights(const std::vector<double>& w, std::string name) {
  const int x_max = static_cast<int>(w.size()) - 1;
  double total = w[0];
  for (int x = 1; x <= x_max; ++x) total += 2.0 * w[static_cast<std::size_t>(x)];
  std::vector<int> support;
  std::vector<double> probs;
  for (int x = -x_max; x <= x_max; ++x) {
    support.push_back(x);
    probs.push_back(w[static_cast<std::size_t>(std::abs(x))] / total);
  }
  return StepDistribution::from_pmf(support, probs, std::move(name));
}

}  // namespace

StepDistribution StepDistribution::two_sided_geometric(double q, int x_max) {
  if (!(q > 0.0 && q < 1.0)) throw Error(Errc::invalid_parameter, "geometric q must lie in (0,1)");
  if (x_max < 1) throw Error(Errc::invalid_parameter, "x_max must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(x_max) + 1);
  for (int x = 0; x <= x_max; ++x) w[static_cast<std::size_t>(x)] = std::pow(q, x);
  std::ostringstream name;
  name << "geometric(q=" << q << ",x_max=" << x_max << ")";
  return symmetric_from_weights(w, name.str());
}

StepDistribution StepDistribution::discrete_gaussian(double s, int x_max) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw Error(Errc::invalid_parameter, "gaussian width s must be positive");
  if (x_max < 1) throw Error(Errc::invalid_parameter, "x_max must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(x_max) + 1);
  for (int x = 0; x <= x_max; ++x)
    w[static_cast<std::size_t>(x)] = std::exp(-0.5 * x * x / (s * s));
  std::ostringstream name;
  name << "gaussian(s=" << s << ",x_max=" << x_max << ")";
  return symmetric_from_weights(w, name.str());
}

std::vector<int> StepDistribution::support() const {
  std::vector<int> out;
  for (int k = min_jump(); k <= max_jump(); ++k)
    if ((*this)(k) > 0.0) out.push_back(k);
  return out;
}

std::vector<double> StepDistribution::probs() const {
  std::vector<double> out;
  for (int k = min_jump(); k <= max_jump(); ++k)
    if ((*this)(k) > 0.0) out.push_back((*this)(k));
  return out;
}

std::vector<NamedStep> builtin_steps() {
  return {
      {"lazy", StepDistribution::lazy_simple()},
      {"geometric", StepDistribution::two_sided_geometric(0.5, 30)},
      {"gaussian", StepDistribution::discrete_gaussian(2.0, 20)},
  };
}

// ---------------------------------------------------------------------------

Potential Potential::linear() {
  Potential v;
  v.kind_ = Kind::linear;
  v.beta_ = 1.0;
  return v;
}

Potential Potential::power(double beta) {
  if (!(beta >= 1.0) || !std::isfinite(beta))
    throw Error(Errc::invalid_parameter, "power potential needs beta >= 1");
  Potential v;
  v.kind_ = Kind::power;
  v.beta_ = beta;
  return v;
}

Potential Potential::table(std::vector<double> values) {
  Potential v;
  v.kind_ = Kind::table;
  v.values_ = std::move(values);
  v.validate();
  return v;
}

void Potential::validate() const {
  if (kind_ != Kind::table) return;
  if (values_.size() < 2) throw Error(Errc::invalid_parameter, "table potential needs >= 2 values");
  if (values_[0] != 0.0) throw Error(Errc::invalid_parameter, "table potential needs V(0) = 0");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < values_[i - 1])
      throw Error(Errc::invalid_parameter, "table potential must be finite and non-decreasing");
    if (i + 1 < values_.size() &&
        values_[i + 1] - 2.0 * values_[i] + values_[i - 1] < -1e-12)
      throw Error(Errc::invalid_parameter, "table potential must be convex");
  }
  if (!(values_.back() - values_[values_.size() - 2] > 0.0))
    throw Error(Errc::invalid_parameter, "table potential must end strictly increasing");
}

double Potential::operator()(double x) const {
  x = std::abs(x);
  switch (kind_) {
    case Kind::linear: return x;
    case Kind::power: return std::pow(x, beta_);
    case Kind::table: {
      const double n = static_cast<double>(values_.size() - 1);
      if (x >= n) {
        const double slope = values_.back() - values_[values_.size() - 2];
        return values_.back() + slope * (x - n);
      }
      const auto i = static_cast<std::size_t>(x);
      const double t = x - static_cast<double>(i);
      return values_[i] + t * (values_[i + 1] - values_[i]);
    }
  }
  return 0.0;
}

double Potential::growth_bound(double alpha) const {
  if (!(alpha > 0.0)) throw Error(Errc::invalid_parameter, "growth certificate needs alpha > 0");
  switch (kind_) {
    case Kind::linear: return alpha;
    case Kind::power: return std::pow(alpha, beta_);
    case Kind::table: {
      // sampled ratio maximization over a geometric grid beyond the table
      const double n = static_cast<double>(values_.size() - 1);
      double best = 0.0;
      for (double x = std::max(1.0, n); x <= n * 1e6 + 1.0; x *= 1.25) {
        const double vx = (*this)(x);
        if (vx > 0.0) best = std::max(best, (*this)(alpha * x) / vx);
      }
      return best;
    }
  }
  return 0.0;
}

std::string Potential::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::linear: os << "linear"; break;
    case Kind::power: os << "power(beta=" << beta_ << ")"; break;
    case Kind::table: os << "table(n=" << values_.size() << ")"; break;
  }
  return os.str();
}

double solve_H(const Potential& potential, double gamma, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(Errc::invalid_parameter, "solve_H needs lambda > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(Errc::invalid_parameter, "solve_H needs gamma > 0");
  auto objective = [&](double h) {
    const double v = lambda * h * h * potential(2.0 * gamma * h) - 1.0;
    if (!std::isfinite(v))
      throw Error(Errc::non_finite_objective, "V is not finite at " + std::to_string(2 * gamma * h));
    return v;
  };
  double lo = 1e-9, hi = 1.0;
  while (objective(lo) >= 0.0) {
    lo *= 1e-3;
    if (lo < 1e-300) throw Error(Errc::bracket_failure, "no sign change near zero");
  }
  while (objective(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e18) throw Error(Errc::bracket_failure, "no sign change below 1e18");
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    (objective(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ConditionalStep conditional_step(const StepDistribution& step, int x) {
  if (x < 0) throw Error(Errc::invalid_parameter, "height must be non-negative");
  ConditionalStep out;
  for (int k = std::max(step.min_jump(), -x); k <= step.max_jump(); ++k)
    out.admissible_mass += step(k);
  if (!(out.admissible_mass > 0.0))
    throw Error(Errc::empty_support, "no admissible jump from height " + std::to_string(x));
  for (int k = std::max(step.min_jump(), -x); k <= step.max_jump(); ++k) {
    if (step(k) == 0.0) continue;
    out.support.push_back(k);
    out.probs.push_back(step(k) / out.admissible_mass);
  }
  for (std::size_t i = 0; i < out.support.size(); ++i) out.mean += out.support[i] * out.probs[i];
  for (std::size_t i = 0; i < out.support.size(); ++i) {
    const double c = out.support[i] - out.mean;
    out.variance += c * c * out.probs[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

void BridgeSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(Errc::invalid_parameter, "lambda must be finite and >= 0");
  if (length < 1) throw Error(Errc::invalid_parameter, "length N must be >= 1");
  if (truncation < 0) throw Error(Errc::invalid_parameter, "truncation K must be >= 0");
  if (start < 0 || start > truncation)
    throw Error(Errc::invalid_parameter, "start height a must lie in [0, K]");
  if (end && (*end < 0 || *end > truncation))
    throw Error(Errc::invalid_parameter, "end height b must lie in [0, K]");
  if (!(tail_tolerance > 0.0 && tail_tolerance <= 1e-6))
    throw Error(Errc::invalid_parameter, "tail tolerance must lie in (0, 1e-6]");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string BridgeSpec::hash() const {
  std::string s;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%a;", v);
    s += buf;
  };
  s += "step:" + std::to_string(step.min_jump()) + ";";
  for (double p : step.dense()) put(p);
  s += "V:" + potential.describe() + ";";
  put(potential.beta());
  for (double v : potential.values()) put(v);
  s += "lambda:";
  put(lambda);
  s += "N:" + std::to_string(length) + ";a:" + std::to_string(start) + ";b:" +
       (end ? std::to_string(*end) : std::string("free")) + ";K:" + std::to_string(truncation) +
       ";eps:";
  put(tail_tolerance);
  return hex64(fnv1a(s));
}

int default_truncation(const StepDistribution& step, const Potential& potential, double lambda,
                       int length, int start, std::optional<int> end) {
  const double scale = lambda > 0.0 ? canonical_scale(potential, lambda)
                                    : std::sqrt(step.variance() * length);
  const int boundary = std::max(start, end.value_or(0));
  return static_cast<int>(std::ceil(8.0 * scale)) + boundary + std::max(step.max_jump(), 0);
}

}  // namespace prewet
