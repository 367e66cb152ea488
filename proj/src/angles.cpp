#include "biphoton/angles.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace biphoton {

std::optional<CircularSummary> circular_mean(std::span<const double> angles,
                                             std::span<const double> weights) {
  if (!weights.empty() && weights.size() != angles.size()) {
    throw std::invalid_argument("circular_mean: weights/angles size mismatch");
  }
  double sx = 0.0, sy = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w > 0.0)) continue;
    sx += w * std::cos(angles[i]);
    sy += w * std::sin(angles[i]);
    sw += w;
  }
  if (sw <= 0.0) return std::nullopt;
  return CircularSummary{std::atan2(sy, sx), std::hypot(sx, sy) / sw, sw};
}

std::optional<CircularSummary> axial_mean(std::span<const double> angles,
                                          std::span<const double> weights) {
  std::vector<double> doubled(angles.size());
  std::transform(angles.begin(), angles.end(), doubled.begin(),
                 [](double a) { return 2.0 * a; });
  auto s = circular_mean(doubled, weights);
  if (!s) return std::nullopt;
  s->mean = 0.5 * s->mean;
  if (s->mean <= -kPi / 2) s->mean += kPi;
  return s;
}

std::optional<double> circular_median(std::span<const double> angles) {
  const auto centre = circular_mean(angles);
  if (!centre) return std::nullopt;
  std::vector<double> dev(angles.size());
  std::transform(angles.begin(), angles.end(), dev.begin(),
                 [&](double a) { return wrap_angle(a - centre->mean); });
  std::sort(dev.begin(), dev.end());
  const std::size_t n = dev.size();
  const double med = (n % 2 == 1) ? dev[n / 2] : 0.5 * (dev[n / 2 - 1] + dev[n / 2]);
  return wrap_angle(centre->mean + med);
}

}  // namespace biphoton
