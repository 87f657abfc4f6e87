#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prewet/model.hpp"

namespace prewet::experiments {

/// Parameter grid shared by every sweep. Lengths are given in units of H^2
/// with H = H_1(lambda).
struct SweepConfig {
  std::vector<double> lambdas{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  StepDistribution step = StepDistribution::lazy_simple();
  Potential potential = Potential::linear();
  /// N = round(length_multiplier * H^2) for pointwise quantities.
  double length_multiplier = 20.0;
  double min_length_multiplier = 1.0;
  /// T values for P(X_{N/2} > T H).
  std::vector<double> tail_grid{2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0};
  /// N / H^2 grid for coupling and maximum-height sweeps.
  std::vector<double> length_grid{1.0, 2.0, 3.0, 4.0};
  /// N / H^2 grid for the area law, which needs N well beyond H^2.
  std::vector<double> area_grid{10.0, 15.0, 20.0, 25.0};
  /// TV relaxation runs to N = relaxation_multiplier * H^2.
  double relaxation_multiplier = 10.0;
  /// Coupling: Y starts at round(coupling_offset * H), X at 0.
  double coupling_offset = 1.0;
  int replicas = 100000;
  std::uint64_t seed = 20240601;
  int jobs = 1;
  /// Optional acceptance band on the primary fitted exponent.
  std::optional<std::pair<double, double>> band;

  void validate() const;
};

struct FitResult {
  std::string quantity;
  double lambda = 0.0;  // 0 when the fit spans the lambda grid
  bool applicable = true;
  std::string note;
  double exponent = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> points;  // in fit coordinates
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> spec_hashes;
};

/// One line of the sweep CSV: lambda,H,quantity,value,stderr.
struct Row {
  double lambda = 0.0;
  double scale = 0.0;
  std::string quantity;
  double value = 0.0;
  double stderr_ = 0.0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TvSeries {
  double lambda = 0.0;
  std::vector<std::pair<int, double>> tv;
};

struct CovarianceSeries {
  double lambda = 0.0;
  std::vector<std::pair<std::pair<int, int>, double>> cov;  // ((i, j), Cov)
};

struct CouplingPoint {
  double lambda = 0.0;
  int length = 0;
  double p_no_meet = 0.0;
  double stderr_ = 0.0;
};

/// Tagged record of one experiment: measured rows, fits and pass/fail checks.
struct Report {
  std::string experiment;
  std::vector<Row> rows;
  std::vector<FitResult> fits;
  std::vector<Check> checks;
  std::vector<TvSeries> tv;
  std::vector<CovarianceSeries> covariances;
  std::vector<CouplingPoint> coupling;

  bool passed() const;
  const FitResult* fit(const std::string& quantity, double lambda = 0.0) const;
  void check(std::string name, bool passed, std::string detail);
};

/// Slope of log E[X_{N/2}] against log lambda. Needs >= 4 lambdas.
Report height_scaling(const SweepConfig& config);

/// Slope of log(-log P(X_{N/2} > T H)) against log T, per lambda.
Report tail_exponent(const SweepConfig& config);

/// Mean area and both area tail events over the length grid.
Report area_law(const SweepConfig& config, double delta);

/// Correlation length from mid-bulk covariance decay, cross-checked against
/// the spectral gap.
Report correlation_length(const SweepConfig& config);

/// Exponential rate of TV relaxation to the stationary law.
Report relaxation(const SweepConfig& config);

/// Non-meeting probability of two independent stationary chains.
Report coupling(const SweepConfig& config);

/// E[X_{N/2}^{2p}] / H^{2p+1} across the lambda grid; 1 < p < 21/8.
Report moment_scaling(const SweepConfig& config, double p);

/// P(max_{1<=k<=N} X_k <= delta H) over the length grid.
Report max_height_floor(const SweepConfig& config, double delta);

/// Reference exponent of H_1 in lambda for power-law potentials, -1/(2+beta).
std::optional<double> scale_exponent(const Potential& potential);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; the first
/// exception by index is rethrown.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

/// N rounded from multiplier * H^2, at least 2.
int length_for(double multiplier, double scale);

}  // namespace prewet::experiments

namespace prewet::experiments {

/// lazy walk, V = |x|, lambda = 0.3, N = 6, a = 0, b = 1, K = 6.
BridgeSpec canonical_spec();

struct OracleSuiteConfig {
  /// Specs small enough to enumerate; compared against the transfer engine.
  std::vector<BridgeSpec> specs{canonical_spec()};
  /// Jump laws for the small-walk identity and inequality grids.
  std::vector<StepDistribution> steps{StepDistribution::lazy_simple()};
  double tolerance = 1e-10;
  double area_delta = 0.5;
  int identity_m_max = 12;
  int identity_d_max = 3;
  int inequality_m_max = 14;
  int inequality_M_max = 6;
};

/// Transfer engine against brute-force enumeration, plus the small-walk
/// identity and inequality grids. One check per family.
Report oracle_suite(const OracleSuiteConfig& config);

}  // namespace prewet::experiments
