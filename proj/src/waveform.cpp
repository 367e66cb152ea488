#include "biphoton/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "biphoton/angles.hpp"

namespace biphoton {
namespace {

constexpr double kLatticeTol = 1e-9;

void require_causal(const TimeGrid& grid, std::span<const Complex> samples) {
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (grid.center(k) < 0.0 && samples[k] != Complex{}) {
      std::ostringstream os;
      os << "causality violation: nonzero amplitude at bin " << k << " (tau = "
         << grid.center(k) << " ns)";
      throw std::invalid_argument(os.str());
    }
  }
}

ComplexEnvelope normalized(const TimeGrid& grid, std::vector<Complex> raw,
                           const char* what) {
  double sum = 0.0;
  for (const auto& z : raw) sum += std::norm(z);
  sum *= grid.bin_width_ns;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw std::invalid_argument(std::string(what) +
                                ": envelope is identically zero on this grid");
  }
  const double scale = 1.0 / std::sqrt(sum);
  for (auto& z : raw) z *= scale;
  return ComplexEnvelope(grid, std::move(raw));
}

}  // namespace

std::optional<std::size_t> TimeGrid::bin_of(double tau_ns) const {
  const double x = (tau_ns - tau_min_ns) / bin_width_ns;
  if (!(x >= 0.0) || x >= static_cast<double>(n_bins)) return std::nullopt;
  return static_cast<std::size_t>(std::floor(x));
}

std::optional<std::size_t> TimeGrid::mirror_of(std::size_t k) const {
  const auto m = bin_of(-center(k));
  if (!m) return std::nullopt;
  if (std::abs(center(*m) + center(k)) > kLatticeTol * bin_width_ns) return std::nullopt;
  return m;
}

bool TimeGrid::symmetric() const {
  return std::abs(tau_min_ns + tau_max_ns()) <= kLatticeTol * bin_width_ns;
}

TimeGrid make_time_grid(double tau_min_ns, double tau_max_ns, double bin_width_ns) {
  if (!(bin_width_ns > 0.0)) {
    throw std::invalid_argument("make_time_grid: bin width must be positive");
  }
  if (!(tau_max_ns > tau_min_ns)) {
    throw std::invalid_argument("make_time_grid: tau_max must exceed tau_min");
  }
  const double ratio = (tau_max_ns - tau_min_ns) / bin_width_ns;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > kLatticeTol * std::max(1.0, ratio)) {
    throw std::invalid_argument("make_time_grid: span is not an integer number of bins");
  }
  if (n < 2) throw std::invalid_argument("make_time_grid: need at least two bins");
  return TimeGrid{tau_min_ns, bin_width_ns, static_cast<std::size_t>(n)};
}

bool same_lattice(const TimeGrid& a, const TimeGrid& b) {
  const double tol = kLatticeTol * a.bin_width_ns;
  return a.n_bins == b.n_bins && std::abs(a.bin_width_ns - b.bin_width_ns) <= tol &&
         std::abs(a.tau_min_ns - b.tau_min_ns) <= tol * std::max(1.0, std::abs(a.tau_min_ns));
}

std::size_t lattice_shift(double delay_ns, double bin_width_ns) {
  if (!(delay_ns >= 0.0)) throw std::invalid_argument("delay T must be non-negative");
  const double r = delay_ns / bin_width_ns;
  const double n = std::round(r);
  if (std::abs(std::abs(r - n) - 0.5) < kLatticeTol) {
    std::ostringstream os;
    os << "delay T = " << delay_ns << " ns is misaligned: it sits on a half bin of "
       << bin_width_ns << " ns";
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::size_t>(n);
}

ComplexEnvelope::ComplexEnvelope(TimeGrid grid, std::vector<Complex> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.n_bins) {
    std::ostringstream os;
    os << "envelope length " << samples_.size() << " does not match grid of "
       << grid_.n_bins << " bins";
    throw std::invalid_argument(os.str());
  }
  require_causal(grid_, samples_);
}

double ComplexEnvelope::norm() const {
  double s = 0.0;
  for (const auto& z : samples_) s += std::norm(z);
  return s * grid_.bin_width_ns;
}

SourceSpec SourceSpec::from_frequencies(double omega_s0, double omega_as0,
                                        double pair_rate) {
  if (!(pair_rate >= 0.0)) throw std::invalid_argument("pair rate must be non-negative");
  return SourceSpec{omega_s0, omega_as0, omega_as0 - omega_s0, pair_rate};
}

ComplexEnvelope damped_rabi_envelope(const RabiParams& p, const TimeGrid& grid) {
  if (!(p.omega_e > 0.0) || !(p.gamma > 0.0)) {
    throw std::invalid_argument("damped_rabi_envelope: omega_e and gamma must be positive");
  }
  std::vector<Complex> raw(grid.n_bins);
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    const double tau = grid.center(k);
    if (tau <= 0.0) continue;
    const double t = tau * kSecondsPerNs;
    const double amp = std::exp(-p.gamma * t) * std::abs(std::sin(0.5 * p.omega_e * t));
    const double phase = p.phi0 + kPi * std::floor(p.omega_e * t / kTwoPi);
    raw[k] = std::polar(amp, phase);
  }
  return normalized(grid, std::move(raw), "damped_rabi_envelope");
}

ComplexEnvelope exponential_envelope(double gamma, const TimeGrid& grid) {
  if (!(gamma > 0.0)) throw std::invalid_argument("exponential_envelope: gamma must be positive");
  std::vector<Complex> raw(grid.n_bins);
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    const double tau = grid.center(k);
    if (tau <= 0.0) continue;
    raw[k] = Complex(std::exp(-0.5 * gamma * tau * kSecondsPerNs), 0.0);
  }
  return normalized(grid, std::move(raw), "exponential_envelope");
}

ComplexEnvelope sampled_envelope(const TimeGrid& grid, std::vector<Complex> values) {
  return ComplexEnvelope(grid, std::move(values));
}

Complex envelope_at(const ComplexEnvelope& env, double tau_ns) {
  const auto k = env.grid().bin_of(tau_ns);
  return k ? env[*k] : Complex{};
}

ComplexEnvelope with_global_phase(const ComplexEnvelope& env, double offset_rad) {
  const Complex rot = std::polar(1.0, offset_rad);
  std::vector<Complex> out(env.samples().begin(), env.samples().end());
  for (auto& z : out) z *= rot;
  return ComplexEnvelope(env.grid(), std::move(out));
}

}  // namespace biphoton
