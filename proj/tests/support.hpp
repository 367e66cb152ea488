#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "biphoton/angles.hpp"
#include "biphoton/interferometer.hpp"
#include "biphoton/waveform.hpp"

namespace fixture {

using namespace biphoton;

inline TimeGrid grid400() { return make_time_grid(-200.0, 200.0, 1.0); }

inline ComplexEnvelope rabi(double phi0 = 0.0) {
  return damped_rabi_envelope(RabiParams{kTwoPi * 50e6, 2e7, phi0}, grid400());
}

inline ComplexEnvelope expo(double gamma = 4e7) { return exponential_envelope(gamma, grid400()); }

inline constexpr double kDelta43 = kTwoPi * 43e6;

// psi at tau by plain index arithmetic on the bin lattice: the bin whose
// range [lo, lo + w) holds tau, or 0 off the grid.
inline Complex lookup(const ComplexEnvelope& env, double tau) {
  const auto& g = env.grid();
  const double x = (tau - g.tau_min_ns) / g.bin_width_ns;
  if (x < 0.0 || x >= static_cast<double>(g.n_bins)) return {};
  return env[static_cast<std::size_t>(x)];
}

// Direct transcription of the post-beam-splitter amplitude, written without
// any library helper beyond the envelope lookup.
inline Complex eq4(const ComplexEnvelope& env, double delta, double a3, double t3, double a4,
                   double t4, double T, double tau, double lambda0 = 0.0) {
  const Complex i(0.0, 1.0);
  const double ns = 1e-9;
  const Complex first = std::exp(-i * delta * (tau - T) * ns) * lookup(env, tau - T) +
                        lookup(env, T - tau);
  const Complex second = std::exp(i * delta * T * ns) * lookup(env, -tau - T) +
                         std::exp(-i * delta * tau * ns) * lookup(env, tau + T);
  return 0.5 * std::cos(a3) * std::sin(a4) * std::exp(i * t4) * first -
         0.5 * std::sin(a3) * std::cos(a4) * std::exp(i * t3) * std::exp(i * lambda0) * second;
}

// Relative difference with an absolute floor for exact zeros.
inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline std::vector<double> poisson_tags(double rate, double duration, std::mt19937_64& gen) {
  std::poisson_distribution<long> n(rate * duration);
  std::uniform_real_distribution<double> u(0.0, duration);
  std::vector<double> t(static_cast<std::size_t>(n(gen)));
  for (auto& x : t) x = u(gen);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace fixture
