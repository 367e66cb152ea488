#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biphoton/waveform.hpp"

namespace biphoton {

enum class Polarization { H, V, D, A, R, L };

std::string_view to_string(Polarization p);
std::optional<Polarization> parse_polarization(std::string_view s);

// Analyzer a_P = a_H cos(alpha) + a_V sin(alpha) exp(i theta).
struct ProjectorSetting {
  double alpha = 0.0;
  double theta = 0.0;
  Polarization label = Polarization::H;
};

// The analyzer angles for a named polarization.
ProjectorSetting projector(Polarization p);

struct AcquisitionConfig {
  double eta = 1.0;               // joint detection efficiency
  double bin_width_s = 1e-9;      // coincidence bin width
  double measure_time_s = 1.0;    // total acquisition time
  double background_rate = 0.0;   // accidental counts per bin
  std::uint64_t seed = 0;

  void validate() const;
  // pair_rate * eta * bin_width * measure_time: counts per unit |psi|^2 (1/s).
  double count_scale(double pair_rate) const;
};

// C = G2 * eta * dt * dt_m.
double coincidence_count(double g2_per_s2, const AcquisitionConfig& acq);

enum class HistogramKind { Expected, Sampled };

std::string_view to_string(HistogramKind k);

// C_{P3P4}(T, tau) with tau = t4 - t3. The source coincidence histogram
// (before the beam splitter) carries no projector settings.
struct CoincidenceHistogram {
  TimeGrid grid;
  double delay_ns = 0.0;
  std::optional<ProjectorSetting> setting3;
  std::optional<ProjectorSetting> setting4;
  std::vector<double> values;
  HistogramKind kind = HistogramKind::Expected;

  double total() const;
  // "VH", "DR", ... or "source" for C12.
  std::string label() const;
};

// Projection rows in order.
enum class SixRow { VH = 0, HV, DD, DA, DR, DL };
inline constexpr std::array<SixRow, 6> kSixRows = {SixRow::VH, SixRow::HV, SixRow::DD,
                                                   SixRow::DA, SixRow::DR, SixRow::DL};
std::pair<Polarization, Polarization> settings_of(SixRow row);
std::optional<SixRow> six_row_of(Polarization p3, Polarization p4);

// The six projection histograms taken at one delay.
struct SixPack {
  std::array<CoincidenceHistogram, 6> rows;

  const CoincidenceHistogram& operator[](SixRow r) const {
    return rows[static_cast<std::size_t>(r)];
  }
  CoincidenceHistogram& operator[](SixRow r) { return rows[static_cast<std::size_t>(r)]; }
  const TimeGrid& grid() const { return rows[0].grid; }
  double delay_ns() const { return rows[0].delay_ns; }

  // Checks the rows carry the projector settings and share grid, delay and kind.
  void validate() const;
};

struct EventStreams {
  std::vector<double> stokes;      // detection times, s, ascending
  std::vector<double> antistokes;  // detection times, s, ascending
  double duration_s = 0.0;
};

// Post-beam-splitter two-photon amplitude psi_34(T, tau). `lambda0` is the
// residual optical phase applied to the second bracket (zero for ideal optics).
Complex joint_amplitude(const ComplexEnvelope& env, double delta, const ProjectorSetting& s3,
                        const ProjectorSetting& s4, double delay_ns, double tau_ns,
                        double lambda0 = 0.0);

CoincidenceHistogram expected_histogram(const ComplexEnvelope& env, const SourceSpec& source,
                                        const ProjectorSetting& s3, const ProjectorSetting& s4,
                                        double delay_ns, const AcquisitionConfig& acq,
                                        const TimeGrid& grid, double lambda0 = 0.0);

SixPack expected_sixpack(const ComplexEnvelope& env, const SourceSpec& source,
                         double delay_ns, const AcquisitionConfig& acq, const TimeGrid& grid,
                         double lambda0 = 0.0);

// Independent Poisson draw per bin. The generator is keyed by (seed, settings, T).
CoincidenceHistogram sample_histogram(const CoincidenceHistogram& expected, std::uint64_t seed);
SixPack sample_sixpack(const SixPack& expected, std::uint64_t seed);

// C12(tau) proportional to A^2(tau) + A^2(-tau). Requires a grid symmetric about 0.
CoincidenceHistogram source_coincidence(const ComplexEnvelope& env, const SourceSpec& source,
                                        const AcquisitionConfig& acq, const TimeGrid& grid);

// Pairs arrive as a Poisson process of rate pair_rate * eta; each pair emits a
// Stokes tag t and an anti-Stokes tag t + tau with tau ~ A^2. Independent
// Poisson background singles are added to each stream.
EventStreams generate_event_streams(const ComplexEnvelope& env, const SourceSpec& source,
                                    const AcquisitionConfig& acq, double singles_background_s,
                                    double singles_background_as, double duration_s,
                                    std::uint64_t seed);

}  // namespace biphoton
