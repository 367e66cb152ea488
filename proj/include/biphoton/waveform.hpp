#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace biphoton {

using Complex = std::complex<double>;

inline constexpr double kSecondsPerNs = 1e-9;

// Uniform lattice of relative delays tau. All times are in nanoseconds.
struct TimeGrid {
  double tau_min_ns = 0.0;
  double bin_width_ns = 1.0;
  std::size_t n_bins = 0;

  double center(std::size_t k) const {
    return tau_min_ns + (static_cast<double>(k) + 0.5) * bin_width_ns;
  }
  double tau_max_ns() const {
    return tau_min_ns + static_cast<double>(n_bins) * bin_width_ns;
  }
  // Bin containing tau, or nullopt outside the grid.
  std::optional<std::size_t> bin_of(double tau_ns) const;
  // Bin whose center is mirrored (-tau) relative to bin k, if on the grid.
  std::optional<std::size_t> mirror_of(std::size_t k) const;
  bool symmetric() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

// Throws std::invalid_argument on non-positive width or a span that is not an
// integer number of bins.
TimeGrid make_time_grid(double tau_min_ns, double tau_max_ns, double bin_width_ns);

// True when the two grids describe the same lattice up to rounding.
bool same_lattice(const TimeGrid& a, const TimeGrid& b);

// Number of whole bins a delay T moves a bin center onto, i.e. the shift
// produced by looking up tau +- T with bin-containment semantics. Throws if T
// is negative or sits on a half-bin, where the lookup would be asymmetric.
std::size_t lattice_shift(double delay_ns, double bin_width_ns);

// Sampled relative waveform psi(tau) = A(tau) exp(i phi(tau)).
class ComplexEnvelope {
 public:
  ComplexEnvelope(TimeGrid grid, std::vector<Complex> samples);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const Complex> samples() const noexcept { return samples_; }
  const Complex& operator[](std::size_t k) const { return samples_[k]; }

  double amplitude(std::size_t k) const { return std::abs(samples_[k]); }
  double phase(std::size_t k) const { return std::arg(samples_[k]); }
  // Sum |psi_k|^2 * bin_width (ns).
  double norm() const;

 private:
  TimeGrid grid_;
  std::vector<Complex> samples_;
};

struct SourceSpec {
  double omega_s0 = 0.0;   // rad/s
  double omega_as0 = 0.0;  // rad/s
  double delta = 0.0;      // omega_as0 - omega_s0, rad/s
  double pair_rate = 0.0;  // pairs/s

  static SourceSpec from_frequencies(double omega_s0, double omega_as0, double pair_rate);
};

struct RabiParams {
  double omega_e = 0.0;  // rad/s
  double gamma = 0.0;    // 1/s
  double phi0 = 0.0;     // rad
};

// A = N exp(-gamma tau) |sin(omega_e tau / 2)|, with a pi phase step at every
// node 2 pi n / omega_e. Zero for tau <= 0. Unit L2 norm over ns.
ComplexEnvelope damped_rabi_envelope(const RabiParams& params, const TimeGrid& grid);

// A = N exp(-gamma tau / 2), flat phase. Zero for tau <= 0.
ComplexEnvelope exponential_envelope(double gamma, const TimeGrid& grid);

// Wraps user samples after checking length and causality.
ComplexEnvelope sampled_envelope(const TimeGrid& grid, std::vector<Complex> values);

// Sample of the bin containing tau; exactly zero off the grid.
Complex envelope_at(const ComplexEnvelope& env, double tau_ns);

// Returns a copy of env with every sample multiplied by exp(i offset).
ComplexEnvelope with_global_phase(const ComplexEnvelope& env, double offset_rad);

}  // namespace biphoton
