#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>

namespace biphoton {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Maps any angle onto (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

struct CircularSummary {
  double mean = 0.0;
  // Mean resultant length in [0, 1].
  double resultant = 0.0;
  double weight_sum = 0.0;
};

// Weighted circular mean. Weights may be empty (uniform). Returns nullopt when
// there are no samples with positive weight.
std::optional<CircularSummary> circular_mean(std::span<const double> angles,
                                             std::span<const double> weights = {});

// Axial mean: direction m such that 2m is the circular mean of 2*angles. The
// result is defined modulo pi and is reported in (-pi/2, pi/2].
std::optional<CircularSummary> axial_mean(std::span<const double> angles,
                                          std::span<const double> weights = {});

// Median taken around the circular mean, so samples straddling +-pi do not
// split into two clusters.
std::optional<double> circular_median(std::span<const double> angles);

}  // namespace biphoton
