#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "prewet/model.hpp"
#include "prewet/rng.hpp"
#include "prewet/spectral.hpp"
#include "prewet/transfer.hpp"

namespace prewet {

struct PathSample {
  std::vector<int> heights;  // X_0 .. X_N
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Draws a path from the measure encoded by `tables` by sampling
/// X_{k+1} proportional to p(y - X_k) w_{k+1}(y) backward(k+1)[y].
PathSample exact_sample(const TransferTables& tables, Rng& rng);

/// Infinite-volume free-endpoint chain: the Doob transform
/// Q(x, y) = p(y - x) w(y) phi(y) / (Lambda phi(x)) of the Perron pair.
class StationaryChain {
 public:
  explicit StationaryChain(const TransferOperator& op);

  int heights() const noexcept { return heights_; }
  int step(int x, Rng& rng) const;
  /// Row x of Q over jumps [min_jump, max_jump].
  std::vector<double> row(int x) const;

 private:
  int heights_ = 0;
  int min_jump_ = 0;
  int width_ = 0;
  std::vector<double> cumulative_;  // heights_ x width_, each row ends at 1
};

struct CouplingOutcome {
  std::optional<int> meet_time;  // first j with X_j == Y_j
  std::vector<int> x_path;
  std::vector<int> y_path;
};

/// Runs two independent copies of `chain` from start_x and start_y up to
/// `horizon` steps and reports their first meeting index.
CouplingOutcome couple(const StationaryChain& chain, int start_x, int start_y, int horizon,
                       Rng& rng_x, Rng& rng_y, bool keep_paths = false);

/// Builds the operator and chain for `spec` and couples from its start
/// height and `other_start`.
CouplingOutcome couple(const BridgeSpec& spec, int other_start, int horizon, Rng& rng_x, Rng& rng_y);

/// Independent exact bridge samples from two tables of equal length; the
/// meeting index is computed on the pair.
CouplingOutcome couple_bridges(const TransferTables& x_tables, const TransferTables& y_tables,
                               Rng& rng_x, Rng& rng_y);

/// Follows X up to the meeting index, then Y. Without a meeting returns X.
std::vector<int> spliced_path(const CouplingOutcome& outcome);

struct McmcRun {
  PathSample final_state;
  std::vector<int> observable;  // X_{N/2} after each sweep
};

/// Exact conditional law of one interior site given its neighbours:
/// proportional to p(x - left) p(right - x) exp(-lambda V(x)) on [0, K].
std::vector<double> heat_bath_conditional(const BridgeSpec& spec, int left, int right);

/// Single-site heat-bath sweeps (sites 1..N-1 in order) started from the
/// flat path at max(a, b), clipped so that every increment is admissible.
McmcRun mcmc_heatbath(const BridgeSpec& spec, int sweeps, Rng& rng);

}  // namespace prewet
