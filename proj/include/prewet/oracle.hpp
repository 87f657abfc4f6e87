#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <vector>

#include "prewet/model.hpp"

// Brute-force ground truth. Nothing here calls into the transfer, spectral or
// sampler modules: paths are enumerated one by one and walk laws are built
// by direct convolution.
namespace prewet::oracle {

/// Exact law of all admissible paths of a small BridgeSpec.
struct PathLaw {
  std::vector<std::vector<int>> paths;  // X_0 .. X_N
  std::vector<long double> weights;     // unnormalized path weights
  long double partition = 0.0L;

  std::size_t size() const noexcept { return paths.size(); }
  double probability(std::size_t i) const { return static_cast<double>(weights[i] / partition); }
  std::vector<double> marginal(int k, int heights) const;
  double mean(int k) const;
  double covariance(int i, int j) const;
  /// P(sum_{i=1}^N X_i >= threshold) and P(sum <= threshold).
  double area_at_least(double threshold) const;
  double area_at_most(double threshold) const;
  double mean_area() const;
};

/// Enumerates every non-negative path on {0..K}; budget caps the number of
/// candidate interior configurations (K+1)^(interior sites).
PathLaw enumerate_paths(const BridgeSpec& spec, double budget = 1e8);

using Rational = boost::multiprecision::cpp_rational;

/// Finitely supported law on the integers: mass[i] = P(X = offset + i).
template <class T>
struct LatticeLaw {
  int offset = 0;
  std::vector<T> mass;

  T at(int x) const {
    const int i = x - offset;
    return (i < 0 || i >= static_cast<int>(mass.size())) ? T(0) : mass[static_cast<std::size_t>(i)];
  }
  int lowest() const { return offset; }
  int highest() const { return offset + static_cast<int>(mass.size()) - 1; }
};

/// Exact lazy simple walk: 1/4, 1/2, 1/4.
LatticeLaw<Rational> lazy_rational_step();
LatticeLaw<long double> step_law(const StepDistribution& step);

/// Laws of S_0 .. S_m.
template <class T>
std::vector<LatticeLaw<T>> walk_laws(const LatticeLaw<T>& step, int m);

template <class T>
T variance_of(const LatticeLaw<T>& step);

template <class T>
struct BridgeMoments {
  T endpoint_probability;   // P(S_m = d)
  std::vector<T> mean;      // E(S_k | S_m = d), k = 0..m
  std::vector<T> variance;  // Var(S_k | S_m = d)
  T jump_variance;          // Var(xi_1 | S_m = d)
  T jump_second_moment;     // E(xi_1^2 | S_m = d)
};

/// Conditional moments of S_k given S_m = d by convolution; m in [1, 14].
template <class T>
BridgeMoments<T> bridge_conditional_moments(const LatticeLaw<T>& step, int m, int d);

/// True when E(S_k|S_m=d) = k d / m and
/// Var(S_k|S_m=d) = k(m-k)/(m-1) Var(xi_1|S_m=d) for every k; exact for
/// rationals, to 1e-12 relative otherwise.
template <class T>
bool exchangeability_holds(const LatticeLaw<T>& step, int m, int d);

/// P(max_{0<k<m} S_k > M | S_m = d).
template <class T>
T conditional_max_tail(const LatticeLaw<T>& step, int m, int d, int M);

struct MaxTailPoint {
  int m = 0, d = 0, M = 0;
  double probability = 0.0;
};

/// Exact conditional maxima over the grid, together with the smallest c
/// making probability <= c m^{3/2} / M^2 hold at every grid point.
struct MaxTailReport {
  std::vector<MaxTailPoint> points;
  double fitted_constant = 0.0;
};

MaxTailReport conditional_max_tail_grid(const LatticeLaw<long double>& step, int m_lo, int m_hi,
                                        int M_lo, int M_hi, int d_max);

struct OnePointCheck {
  double joint = 0.0;   // P(S_k > M + D, S_m = d)
  double middle = 0.0;  // k (m - k) sigma^4 / M^4
  double bound = 0.0;   // m^2 sigma^4 / (4 M^4)
  bool holds() const { return joint <= middle * (1 + 1e-12) && middle <= bound * (1 + 1e-12); }
};

OnePointCheck one_point_chebyshev_check(const LatticeLaw<long double>& step, int m, int d, int k,
                                        int M, int D);

struct EtemadiCheck {
  double exact = 0.0;  // P(max_{0<k<m} S_k > M)
  double bound = 0.0;  // 3 max_{0<k<m} P(S_k > M / 3)
  bool holds() const { return exact <= bound * (1 + 1e-12); }
};

EtemadiCheck etemadi_check(const LatticeLaw<long double>& step, int m, int M);

/// Smallest m0 with P(S_m = d) >= 1 / (2e sqrt(2 pi sigma^2 m)) for every
/// m in [m0, m_max]; nullopt if the floor fails at m_max.
std::optional<int> llt_floor_check(const LatticeLaw<long double>& step, int d, int m_max = 200);

/// Exact P(max_{0<k<m} S_k > M | S_m = d), compared against 1/3.
double small_droplet_probability(const LatticeLaw<long double>& step, int m, int M, int d);

/// Largest ratio zeta among grid points m / M^2 such that every grid point
/// with m / M^2 <= zeta has conditional maximum probability <= 1/3.
struct DropletReport {
  double zeta = 0.0;
  double first_violation = 0.0;  // smallest violating ratio, 0 if none
  std::size_t points = 0;
};

DropletReport small_droplet_check(const LatticeLaw<long double>& step, int m_lo, int m_hi, int M_lo,
                                  int M_hi, int d_max);

double to_double(const Rational& r);
inline double to_double(long double v) { return static_cast<double>(v); }

}  // namespace prewet::oracle
