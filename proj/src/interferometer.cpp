#include "biphoton/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "biphoton/angles.hpp"
#include "biphoton/rng.hpp"

namespace biphoton {
namespace {

// cos/sin of the projector angles produce 6e-17 instead of 0.
double snap(double x) { return std::abs(x) < 1e-15 ? 0.0 : x; }

void require_aligned(const TimeGrid& hist, const TimeGrid& env) {
  const double bw = env.bin_width_ns;
  if (std::abs(hist.bin_width_ns - bw) > 1e-9 * bw) {
    throw std::invalid_argument("histogram grid bin width differs from envelope grid");
  }
  const double off = (hist.tau_min_ns - env.tau_min_ns) / bw;
  if (std::abs(off - std::round(off)) > 1e-6) {
    throw std::invalid_argument("histogram grid is not aligned with envelope grid");
  }
}

void require_bin_width(const AcquisitionConfig& acq, const TimeGrid& grid) {
  const double bw_s = grid.bin_width_ns * kSecondsPerNs;
  if (std::abs(acq.bin_width_s - bw_s) > 1e-9 * bw_s) {
    throw std::invalid_argument("acquisition bin width does not match histogram grid");
  }
}

}  // namespace

std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::H: return "H";
    case Polarization::V: return "V";
    case Polarization::D: return "D";
    case Polarization::A: return "A";
    case Polarization::R: return "R";
    case Polarization::L: return "L";
  }
  return "?";
}

std::optional<Polarization> parse_polarization(std::string_view s) {
  for (auto p : {Polarization::H, Polarization::V, Polarization::D, Polarization::A,
                 Polarization::R, Polarization::L}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

ProjectorSetting projector(Polarization p) {
  switch (p) {
    case Polarization::H: return {0.0, 0.0, p};
    case Polarization::V: return {kPi / 2, 0.0, p};
    case Polarization::D: return {kPi / 4, 0.0, p};
    case Polarization::A: return {-kPi / 4, 0.0, p};
    case Polarization::R: return {kPi / 4, kPi / 2, p};
    case Polarization::L: return {kPi / 4, -kPi / 2, p};
  }
  throw std::invalid_argument("unknown polarization");
}

void AcquisitionConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (!(bin_width_s > 0.0)) throw std::invalid_argument("bin_width must be positive");
  if (!(measure_time_s > 0.0)) throw std::invalid_argument("measure_time must be positive");
  if (!(background_rate >= 0.0)) throw std::invalid_argument("background_rate must be >= 0");
}

double AcquisitionConfig::count_scale(double pair_rate) const {
  return pair_rate * eta * bin_width_s * measure_time_s;
}

double coincidence_count(double g2_per_s2, const AcquisitionConfig& acq) {
  return g2_per_s2 * acq.eta * acq.bin_width_s * acq.measure_time_s;
}

std::string_view to_string(HistogramKind k) {
  return k == HistogramKind::Expected ? "expected" : "sampled";
}

double CoincidenceHistogram::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

std::string CoincidenceHistogram::label() const {
  if (!setting3 || !setting4) return "source";
  return std::string(to_string(setting3->label)) + std::string(to_string(setting4->label));
}

std::pair<Polarization, Polarization> settings_of(SixRow row) {
  using P = Polarization;
  switch (row) {
    case SixRow::VH: return {P::V, P::H};
    case SixRow::HV: return {P::H, P::V};
    case SixRow::DD: return {P::D, P::D};
    case SixRow::DA: return {P::D, P::A};
    case SixRow::DR: return {P::D, P::R};
    case SixRow::DL: return {P::D, P::L};
  }
  throw std::invalid_argument("unknown row");
}

std::optional<SixRow> six_row_of(Polarization p3, Polarization p4) {
  for (auto r : kSixRows) {
    if (settings_of(r) == std::pair{p3, p4}) return r;
  }
  return std::nullopt;
}

void SixPack::validate() const {
  const auto& ref = rows[0];
  for (auto r : kSixRows) {
    const auto& h = (*this)[r];
    const auto [p3, p4] = settings_of(r);
    if (!h.setting3 || !h.setting4 || h.setting3->label != p3 || h.setting4->label != p4) {
      throw std::invalid_argument("six-pack row does not carry its projector settings");
    }
    if (!same_lattice(h.grid, ref.grid)) throw std::invalid_argument("six-pack grid mismatch");
    if (std::abs(h.delay_ns - ref.delay_ns) > 1e-9) {
      throw std::invalid_argument("six-pack delay mismatch");
    }
    if (h.kind != ref.kind) throw std::invalid_argument("six-pack kind mismatch");
    if (h.values.size() != h.grid.n_bins) throw std::invalid_argument("six-pack length mismatch");
  }
}

Complex joint_amplitude(const ComplexEnvelope& env, double delta, const ProjectorSetting& s3,
                        const ProjectorSetting& s4, double delay_ns, double tau_ns,
                        double lambda0) {
  lattice_shift(delay_ns, env.grid().bin_width_ns);
  const double T = delay_ns;
  const double tau = tau_ns;
  const double ns = kSecondsPerNs;
  const auto phase = [](double a) { return std::polar(1.0, a); };

  const double c3 = snap(std::cos(s3.alpha)), si3 = snap(std::sin(s3.alpha));
  const double c4 = snap(std::cos(s4.alpha)), si4 = snap(std::sin(s4.alpha));

  Complex first{}, second{};
  if (c3 * si4 != 0.0) {
    const Complex bracket = phase(-delta * (tau - T) * ns) * envelope_at(env, tau - T) +
                            envelope_at(env, T - tau);
    first = 0.5 * c3 * si4 * phase(s4.theta) * bracket;
  }
  if (si3 * c4 != 0.0) {
    const Complex bracket = phase(delta * T * ns) * envelope_at(env, -tau - T) +
                            phase(-delta * tau * ns) * envelope_at(env, tau + T);
    second = 0.5 * si3 * c4 * phase(s3.theta) * phase(lambda0) * bracket;
  }
  return first - second;
}

CoincidenceHistogram expected_histogram(const ComplexEnvelope& env, const SourceSpec& source,
                                        const ProjectorSetting& s3, const ProjectorSetting& s4,
                                        double delay_ns, const AcquisitionConfig& acq,
                                        const TimeGrid& grid, double lambda0) {
  acq.validate();
  require_aligned(grid, env.grid());
  require_bin_width(acq, grid);
  lattice_shift(delay_ns, grid.bin_width_ns);

  // |psi|^2 is a density per ns; the count law wants per s.
  const double scale = acq.count_scale(source.pair_rate) / kSecondsPerNs;
  CoincidenceHistogram h{grid, delay_ns, s3, s4, std::vector<double>(grid.n_bins),
                         HistogramKind::Expected};
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    const Complex a = joint_amplitude(env, source.delta, s3, s4, delay_ns, grid.center(k), lambda0);
    h.values[k] = std::norm(a) * scale + acq.background_rate;
  }
  return h;
}

SixPack expected_sixpack(const ComplexEnvelope& env, const SourceSpec& source, double delay_ns,
                         const AcquisitionConfig& acq, const TimeGrid& grid, double lambda0) {
  SixPack pack;
  for (auto r : kSixRows) {
    const auto [p3, p4] = settings_of(r);
    pack[r] = expected_histogram(env, source, projector(p3), projector(p4), delay_ns, acq, grid,
                                 lambda0);
  }
  return pack;
}

CoincidenceHistogram sample_histogram(const CoincidenceHistogram& expected, std::uint64_t seed) {
  if (expected.kind != HistogramKind::Expected) {
    throw std::invalid_argument("sample_histogram: input must be an expected histogram");
  }
  auto gen = derive_stream(seed, "hist:" + expected.label(), expected.delay_ns);
  CoincidenceHistogram out = expected;
  out.kind = HistogramKind::Sampled;
  for (double& v : out.values) {
    if (!(v > 0.0)) {
      v = 0.0;
      continue;
    }
    std::poisson_distribution<long long> pois(v);
    v = static_cast<double>(pois(gen));
  }
  return out;
}

SixPack sample_sixpack(const SixPack& expected, std::uint64_t seed) {
  SixPack out;
  for (auto r : kSixRows) out[r] = sample_histogram(expected[r], seed);
  return out;
}

CoincidenceHistogram source_coincidence(const ComplexEnvelope& env, const SourceSpec& source,
                                        const AcquisitionConfig& acq, const TimeGrid& grid) {
  acq.validate();
  if (!grid.symmetric()) throw std::invalid_argument("source_coincidence: grid must be symmetric about 0");
  require_aligned(grid, env.grid());
  require_bin_width(acq, grid);
  const double scale = acq.count_scale(source.pair_rate) / kSecondsPerNs;
  CoincidenceHistogram h{grid, 0.0, std::nullopt, std::nullopt, std::vector<double>(grid.n_bins),
                         HistogramKind::Expected};
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    const double tau = grid.center(k);
    const double g = std::norm(envelope_at(env, tau)) + std::norm(envelope_at(env, -tau));
    h.values[k] = g * scale + acq.background_rate;
  }
  return h;
}

EventStreams generate_event_streams(const ComplexEnvelope& env, const SourceSpec& source,
                                    const AcquisitionConfig& acq, double singles_background_s,
                                    double singles_background_as, double duration_s,
                                    std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  if (!(singles_background_s >= 0.0) || !(singles_background_as >= 0.0) ||
      !(source.pair_rate >= 0.0)) {
    throw std::invalid_argument("rates must be non-negative");
  }
  EventStreams out;
  out.duration_s = duration_s;

  const auto poisson_count = [](std::mt19937_64& g, double mean) -> long long {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<long long>(mean)(g);
  };

  {
    auto gen = derive_stream(seed, "events:pairs");
    const long long n = poisson_count(gen, source.pair_rate * acq.eta * duration_s);
    if (n > 0) {
      const auto& grid = env.grid();
      std::vector<double> density(grid.n_bins);
      for (std::size_t k = 0; k < grid.n_bins; ++k) density[k] = std::norm(env[k]);
      std::discrete_distribution<std::size_t> pick(density.begin(), density.end());
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      out.stokes.reserve(static_cast<std::size_t>(n));
      out.antistokes.reserve(static_cast<std::size_t>(n));
      for (long long i = 0; i < n; ++i) {
        const double t = unit(gen) * duration_s;
        const std::size_t k = pick(gen);
        const double lo = std::max(grid.center(k) - 0.5 * grid.bin_width_ns, 0.0);
        const double hi = grid.center(k) + 0.5 * grid.bin_width_ns;
        const double tau_s = (lo + unit(gen) * (hi - lo)) * kSecondsPerNs;
        if (t + tau_s > duration_s) continue;
        out.stokes.push_back(t);
        out.antistokes.push_back(t + tau_s);
      }
    }
  }

  const auto add_background = [&](std::vector<double>& tags, double rate, std::string_view tag) {
    auto gen = derive_stream(seed, tag);
    const long long n = poisson_count(gen, rate * duration_s);
    std::uniform_real_distribution<double> unit(0.0, duration_s);
    for (long long i = 0; i < n; ++i) tags.push_back(unit(gen));
  };
  add_background(out.stokes, singles_background_s, "events:background:s");
  add_background(out.antistokes, singles_background_as, "events:background:as");

  std::sort(out.stokes.begin(), out.stokes.end());
  std::sort(out.antistokes.begin(), out.antistokes.end());
  return out;
}

}  // namespace biphoton
