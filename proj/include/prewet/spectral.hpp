#pragma once

#include <span>
#include <utility>
#include <vector>

#include "prewet/model.hpp"

namespace prewet {

struct PowerIterationOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
  /// When false, an unconverged operator is returned with converged == false
  /// instead of throwing NoConvergence.
  bool throw_on_failure = true;
};

/// Perron data of the truncated kernel K(x, y) = p(y - x) exp(-lambda V(y))
/// on {0..K}. Normalized so that sum(psi) = 1 and psi . phi = 1.
struct TransferOperator {
  BridgeSpec spec;  // length and boundaries are ignored
  std::vector<double> weights;
  double eigenvalue = 0.0;
  std::vector<double> right;  // phi, K phi = Lambda phi
  std::vector<double> left;   // psi, psi K = Lambda psi
  int iterations = 0;
  double right_residual = 0.0;  // ||K phi - Lambda phi||_inf / (Lambda ||phi||_inf)
  double left_residual = 0.0;
  bool converged = false;
  bool substochastic_flag = false;  // lambda == 0: no stationarity claim

  int heights() const noexcept { return static_cast<int>(right.size()); }

  /// (K v)(x) = sum_y p(y - x) w(y) v(y)
  void apply_right(std::span<const double> v, std::span<double> out) const;
  /// (v K)(y) = w(y) sum_x v(x) p(y - x)
  void apply_left(std::span<const double> v, std::span<double> out) const;
};

TransferOperator build_operator(const BridgeSpec& spec, const PowerIterationOptions& options = {});

struct StationaryLaws {
  std::vector<double> endpoint;  // pi_lambda: normalized psi
  std::vector<double> bulk;      // normalized phi * psi
};

StationaryLaws stationary(const TransferOperator& op);

struct GapEstimate {
  double gap = 1.0;  // 1 - |lambda_2| / Lambda
  double second_modulus = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Power iteration on the kernel with the Perron pair deflated out.
GapEstimate spectral_gap(const TransferOperator& op, const PowerIterationOptions& options = {});

/// Total-variation distance between the free-endpoint law after N steps
/// (normalized K-iterates of the initial law) and pi_lambda, N = 0..n_max.
std::vector<std::pair<int, double>> tv_relaxation(const TransferOperator& op, int start, int n_max);
std::vector<std::pair<int, double>> tv_relaxation(const TransferOperator& op,
                                                  std::span<const double> initial, int n_max);

double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace prewet
