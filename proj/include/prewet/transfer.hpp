#pragma once

#include <optional>
#include <span>
#include <vector>

#include "prewet/model.hpp"

namespace prewet {

struct BuildOptions {
  /// Reject tables whose marginals put mass >= spec.tail_tolerance above
  /// K - buffer. Disable only when the truncation is itself the event of
  /// interest (a hard ceiling).
  bool check_truncation = true;
};

/// Forward/backward partition vectors over heights {0..K} for one BridgeSpec.
///
/// forward(k)[x] * exp(forward_log_scale(k)) is the weight of all admissible
/// paths 0..k ending at x (site k's potential included). backward(k)[x] *
/// exp(backward_log_scale(k)) is the weight of all continuations from x at
/// index k to the right boundary (site k's potential excluded). Every stored
/// vector has max entry 1.
class TransferTables {
 public:
  const BridgeSpec& spec() const noexcept { return spec_; }
  int length() const noexcept { return spec_.length; }
  int heights() const noexcept { return spec_.truncation + 1; }

  std::span<const double> forward(int k) const;
  std::span<const double> backward(int k) const;
  double forward_log_scale(int k) const { return forward_log_[static_cast<std::size_t>(k)]; }
  double backward_log_scale(int k) const { return backward_log_[static_cast<std::size_t>(k)]; }

  double log_partition() const noexcept { return log_z_; }
  double partition() const;
  /// log Z recombined from forward(k) and backward(k); equal for every k.
  double log_partition_at(int k) const;

  /// Potential factor exp(-lambda V(y)) carried by index k (1 at index 0, and
  /// at index N of a bridge).
  double site_weight(int k, int y) const;
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  friend TransferTables build_tables(const BridgeSpec&, const BuildOptions&);
  TransferTables() = default;

  BridgeSpec spec_;
  std::vector<double> weights_;
  std::vector<double> forward_, backward_;
  std::vector<double> forward_log_, backward_log_;
  double log_z_ = 0.0;
};

TransferTables build_tables(const BridgeSpec& spec, const BuildOptions& options = {});

/// Retries with doubled truncation (up to `retries` times) on
/// TruncationOverflow.
TransferTables build_tables_auto(BridgeSpec spec, int retries = 3);

/// Z^lambda / Z^0 = E^0[exp(-lambda sum_{j=1}^{N-1} V(X_j))].
double partition_ratio(const BridgeSpec& tilted, const BridgeSpec& untilted,
                       const BuildOptions& options = {});

struct HeightMarginal {
  int index = 0;
  std::vector<double> pmf;

  double mean() const;
  double moment(double power) const;
};

HeightMarginal marginal(const TransferTables& tables, int k);

/// P(X_k > threshold).
double tail_probability(const TransferTables& tables, int k, double threshold);

/// Cov(X_i, X_j), 0 < i <= j < N.
double covariance(const TransferTables& tables, int i, int j);

/// Cov(X_i, X_j) for j = i..j_last from a single propagation.
std::vector<double> covariance_row(const TransferTables& tables, int i, int j_last);

struct AreaOptions {
  /// Height scale in the thresholds; defaults to H_1(lambda).
  std::optional<double> scale;
  /// Upper bound on (K+1) * N * buckets.
  double work_budget = 2e10;
  int target_buckets = 4096;
};

/// Law of the area A = sum_{i=1}^N X_i against the thresholds HN/delta and
/// delta*HN. With bucket size 1 the probabilities are exact; otherwise the
/// error fields hold the mass in the bucket just outside each event.
struct AreaStatistics {
  double mean_area = 0.0;
  double scale = 0.0;
  double delta = 0.0;
  double bucket = 1.0;
  double upper_threshold = 0.0;
  double lower_threshold = 0.0;
  double upper_probability = 0.0;  // P(A >= HN / delta)
  double lower_probability = 0.0;  // P(A <= delta H N)
  double upper_error = 0.0;
  double lower_error = 0.0;
};

AreaStatistics area_statistics(const TransferTables& tables, double delta,
                               const AreaOptions& options = {});

}  // namespace prewet
