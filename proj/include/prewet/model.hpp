#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prewet {

/// Integer-valued jump law with zero mean, finite positive variance and
/// strict aperiodicity: min{p^n(-1), p^n(0), p^n(1)} > 0 for all n >= A.
///
/// Probabilities are stored densely over [min_jump, max_jump]; interior
/// entries may be zero.
class StepDistribution {
 public:
  /// Validates every invariant; throws Error(invalid_parameter) otherwise.
  static StepDistribution from_pmf(const std::vector<int>& support,
                                   const std::vector<double>& probs,
                                   std::string name = "custom");

  /// p(0) = 1/2, p(+-1) = 1/4.
  static StepDistribution lazy_simple();
  /// p(x) proportional to q^|x| on |x| <= x_max.
  static StepDistribution two_sided_geometric(double q, int x_max);
  /// p(x) proportional to exp(-x^2 / 2s^2) on |x| <= x_max.
  static StepDistribution discrete_gaussian(double s, int x_max);

  int min_jump() const noexcept { return min_jump_; }
  int max_jump() const noexcept { return min_jump_ + static_cast<int>(dense_.size()) - 1; }
  int width() const noexcept { return static_cast<int>(dense_.size()); }

  double operator()(int k) const noexcept {
    const int i = k - min_jump_;
    return (i < 0 || i >= width()) ? 0.0 : dense_[static_cast<std::size_t>(i)];
  }

  /// p over [min_jump, max_jump].
  std::span<const double> dense() const noexcept { return dense_; }
  /// Jumps carrying positive mass, ascending.
  std::vector<int> support() const;
  std::vector<double> probs() const;

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  int aperiodicity_constant() const noexcept { return aperiodicity_; }
  const std::string& name() const noexcept { return name_; }

  bool operator==(const StepDistribution& other) const {
    return min_jump_ == other.min_jump_ && dense_ == other.dense_;
  }

 private:
  StepDistribution() = default;

  int min_jump_ = 0;
  std::vector<double> dense_;
  double mean_ = 0.0;
  double variance_ = 0.0;
  int aperiodicity_ = 0;
  std::string name_;
};

/// Smallest A such that min{p^n(-1), p^n(0), p^n(1)} > 0 for every
/// n in [A, A + 5], searched up to n = max_n; nullopt if none.
std::optional<int> strict_aperiodicity_constant(std::span<const double> dense, int min_jump,
                                                int max_n = 64);

struct NamedStep {
  std::string key;
  StepDistribution step;
};

/// Catalog of shipped jump laws.
std::vector<NamedStep> builtin_steps();

/// Convex non-decreasing self-potential with V(0) = 0.
class Potential {
 public:
  enum class Kind { linear, power, table };

  static Potential linear();
  /// V(x) = x^beta, beta >= 1.
  static Potential power(double beta);
  /// V(i) = values[i] at integers, linear in between and linearly extended
  /// with the last slope beyond the table.
  static Potential table(std::vector<double> values);

  double operator()(double x) const;

  /// Upper bound f(alpha) on limsup V(alpha x) / V(x).
  double growth_bound(double alpha) const;

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::string describe() const;

  bool operator==(const Potential& other) const {
    return kind_ == other.kind_ && beta_ == other.beta_ && values_ == other.values_;
  }

 private:
  Potential() = default;
  void validate() const;

  Kind kind_ = Kind::linear;
  double beta_ = 1.0;
  std::vector<double> values_;
};

/// Unique H > 0 with lambda * H^2 * V(2 gamma H) = 1, relative accuracy 1e-10.
double solve_H(const Potential& potential, double gamma, double lambda);

/// Shorthand for the canonical scale, gamma = 1.
inline double canonical_scale(const Potential& potential, double lambda) {
  return solve_H(potential, 1.0, lambda);
}

struct ConditionalStep {
  std::vector<int> support;
  std::vector<double> probs;
  double mean = 0.0;
  double variance = 0.0;
  double admissible_mass = 0.0;  // P(xi >= -x)
};

/// Law of a jump from height x conditioned to land at or above zero.
ConditionalStep conditional_step(const StepDistribution& step, int x);

/// One finite-volume problem: non-negative walk from `start` at index 0 to
/// `end` at index `length` on heights {0..truncation}, tilted by
/// exp(-lambda * sum of V over interior sites). A missing `end` means a free
/// right endpoint, in which case X_N carries the potential as well.
struct BridgeSpec {
  StepDistribution step = StepDistribution::lazy_simple();
  Potential potential = Potential::linear();
  double lambda = 0.0;
  int length = 1;
  int start = 0;
  std::optional<int> end = 0;
  int truncation = 1;
  double tail_tolerance = 1e-9;

  void validate() const;
  bool free_end() const noexcept { return !end.has_value(); }
  /// Largest positive jump; heights above truncation - buffer are the
  /// truncation tail.
  int buffer() const noexcept { return step.max_jump() > 0 ? step.max_jump() : 0; }

  /// Stable 64-bit FNV-1a digest of every field, hex encoded.
  std::string hash() const;

  bool operator==(const BridgeSpec&) const = default;
};

/// ceil(8 H_1(lambda)) + max(a, b) + max positive jump. For lambda == 0 the
/// scale is replaced by the diffusive sqrt(sigma^2 N).
int default_truncation(const StepDistribution& step, const Potential& potential, double lambda,
                       int length, int start, std::optional<int> end);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace prewet
