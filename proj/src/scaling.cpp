#include "synthkit/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "synthkit/errors.hpp"

namespace synthkit {

ScalingFit fit_log_linear(const std::vector<ScalingPoint>& points) {
  if (points.size() < 2) throw ValidationError("log-linear fit needs at least 2 points");
  for (const auto& p : points) {
    if (p.tokens <= 0) throw ValidationError("token counts must be positive");
  }

  const double n = static_cast<double>(points.size());
  double sum_x = 0.0, sum_y = 0.0;
  for (const auto& p : points) {
    sum_x += std::log(static_cast<double>(p.tokens));
    sum_y += p.accuracy;
  }
  const double mean_x = sum_x / n;
  const double mean_y = sum_y / n;

  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    double dx = std::log(static_cast<double>(p.tokens)) - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.accuracy - mean_y);
  }
  if (sxx == 0.0) throw ValidationError("all token values are equal; the design is singular");

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.n_points = static_cast<int>(points.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& p : points) {
    double predicted = fitted_accuracy(fit, static_cast<double>(p.tokens));
    ss_res += (p.accuracy - predicted) * (p.accuracy - predicted);
    ss_tot += (p.accuracy - mean_y) * (p.accuracy - mean_y);
  }
  fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);
  return fit;
}

double fitted_accuracy(const ScalingFit& fit, double tokens) {
  return fit.intercept + fit.slope * std::log(tokens);
}

CrossoverEstimate extrapolate_crossover(const ScalingFit& fit, double target_accuracy,
                                        std::int64_t original_tokens) {
  if (fit.slope <= 0.0) {
    throw ValidationError("crossover undefined: fitted slope is " + std::to_string(fit.slope) +
                          " (no improvement with more tokens)");
  }
  if (original_tokens <= 0) throw ValidationError("original_tokens must be positive");
  const double exponent = (target_accuracy - fit.intercept) / fit.slope;
  if (exponent > 700.0) {
    throw SynthError("crossover is beyond horizon: required exponent " + std::to_string(exponent) +
                     " would overflow");
  }
  CrossoverEstimate estimate;
  estimate.tokens_needed = std::exp(exponent);
  estimate.ratio_to_original = estimate.tokens_needed / static_cast<double>(original_tokens);
  estimate.target_outside_unit_range = target_accuracy < 0.0 || target_accuracy > 1.0;
  return estimate;
}

std::vector<BandPoint> confidence_band(const std::vector<RunPoint>& points, double z) {
  std::vector<BandPoint> band;
  band.reserve(points.size());
  for (const auto& p : points) {
    if (p.run_accuracies.size() < 2) {
      throw ValidationError("confidence band needs at least 2 runs per token value (token value " +
                            std::to_string(p.tokens) + " has " +
                            std::to_string(p.run_accuracies.size()) + ")");
    }
    const double n = static_cast<double>(p.run_accuracies.size());
    double mean = 0.0;
    for (double a : p.run_accuracies) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : p.run_accuracies) var += (a - mean) * (a - mean);
    var /= (n - 1.0);
    double half_width = z * std::sqrt(var) / std::sqrt(n);
    band.push_back({p.tokens, mean, mean - half_width, mean + half_width});
  }
  return band;
}

}  // namespace synthkit
