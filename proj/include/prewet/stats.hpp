#pragma once

#include <cstddef>
#include <span>

namespace prewet {

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins = 0;
};

/// Pearson goodness of fit. Categories with expected count below
/// `min_expected` are pooled into one bin.
ChiSquareResult chi_square_test(std::span<const double> counts, std::span<const double> probs,
                                double min_expected = 5.0);

/// Integrated autocorrelation time with Sokal's automatic window
/// (smallest M with M >= c * tau(M)).
struct AutocorrelationEstimate {
  double mean = 0.0;
  double variance = 0.0;
  double tau_int = 0.5;
  int window = 0;
  double stderr_of_mean = 0.0;  // sqrt(2 tau var / n)
};

AutocorrelationEstimate integrated_autocorrelation(std::span<const double> series, double c = 6.0);

}  // namespace prewet
