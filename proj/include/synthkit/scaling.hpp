#pragma once

#include <cstdint>
#include <vector>

namespace synthkit {

struct ScalingPoint {
  std::int64_t tokens = 0;  // > 0
  double accuracy = 0.0;
};

// accuracy ~ intercept + slope * ln(tokens), ordinary least squares.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
};

ScalingFit fit_log_linear(const std::vector<ScalingPoint>& points);

double fitted_accuracy(const ScalingFit& fit, double tokens);

struct CrossoverEstimate {
  double tokens_needed = 0.0;
  double ratio_to_original = 0.0;
  bool target_outside_unit_range = false;  // flagged, not clamped
};

// Inverts the fit at target_accuracy. Requires a positive slope; exponents
// beyond 700 are reported as beyond the extrapolation horizon.
CrossoverEstimate extrapolate_crossover(const ScalingFit& fit, double target_accuracy,
                                        std::int64_t original_tokens);

struct RunPoint {
  std::int64_t tokens = 0;
  std::vector<double> run_accuracies;  // >= 2 entries
};

struct BandPoint {
  std::int64_t tokens = 0;
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// mean +/- z * s / sqrt(n) per token value, with s the sample standard
// deviation over run-level accuracies.
std::vector<BandPoint> confidence_band(const std::vector<RunPoint>& points, double z = 1.96);

}  // namespace synthkit
