#include "biphoton/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "biphoton/angles.hpp"
#include "biphoton/rng.hpp"

namespace biphoton {
namespace {

struct Split {
  std::vector<double> first, second;
};

Split virtual_beam_splitter(std::span<const double> tags, std::uint64_t seed, std::string_view tag) {
  auto gen = derive_stream(seed, tag);
  std::bernoulli_distribution coin(0.5);
  Split s;
  for (double t : tags) (coin(gen) ? s.first : s.second).push_back(t);
  return s;
}

std::size_t count_in(const std::vector<double>& sorted, double lo, double hi) {
  const auto a = std::lower_bound(sorted.begin(), sorted.end(), lo);
  const auto b = std::upper_bound(a, sorted.end(), hi);
  return static_cast<std::size_t>(b - a);
}

}  // namespace

std::size_t CorrelationEstimate::peak_bin() const {
  return static_cast<std::size_t>(std::max_element(g2.begin(), g2.end()) - g2.begin());
}

CorrelationEstimate cross_g2(const EventStreams& streams, const TimeGrid& grid) {
  if (streams.stokes.empty() || streams.antistokes.empty()) {
    throw std::invalid_argument("cross_g2: empty event stream");
  }
  const double lo = grid.tau_min_ns * kSecondsPerNs;
  const double hi = grid.tau_max_ns() * kSecondsPerNs;
  const double bw = grid.bin_width_ns * kSecondsPerNs;

  CorrelationEstimate out{grid, std::vector<double>(grid.n_bins), std::vector<double>(grid.n_bins),
                          std::vector<double>(grid.n_bins, 0.0)};
  const auto& as = streams.antistokes;
  auto first = as.begin();
  for (double ts : streams.stokes) {
    while (first != as.end() && *first < ts + lo) ++first;
    for (auto it = first; it != as.end() && *it < ts + hi; ++it) {
      const auto k = static_cast<std::size_t>(std::floor((*it - ts - lo) / bw));
      if (k < grid.n_bins) out.coincidences[k] += 1.0;
    }
  }
  const double norm = streams.duration_s /
                      (static_cast<double>(streams.stokes.size()) *
                       static_cast<double>(as.size()) * bw);
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    out.g2[k] = out.coincidences[k] * norm;
    out.std_error[k] = std::sqrt(std::max(out.coincidences[k], 1.0)) * norm;
  }
  return out;
}

RatioWithError auto_g2_zero(std::span<const double> tags, double duration_s,
                            std::uint64_t split_seed, double window_ns) {
  if (!(window_ns > 0.0)) throw std::invalid_argument("auto_g2_zero: window must be positive");
  if (tags.empty()) throw std::invalid_argument("auto_g2_zero: empty stream");
  const auto halves = virtual_beam_splitter(tags, split_seed, "auto-split");
  if (halves.first.size() < 2 || halves.second.size() < 2) {
    throw std::invalid_argument("auto_g2_zero: too few events after the split");
  }
  const double w = window_ns * kSecondsPerNs;
  double n_ab = 0.0;
  for (double t : halves.first) n_ab += static_cast<double>(count_in(halves.second, t - w, t + w));
  const double norm = duration_s / (static_cast<double>(halves.first.size()) *
                                    static_cast<double>(halves.second.size()) * 2.0 * w);
  return {n_ab * norm, std::sqrt(std::max(n_ab, 1.0)) * norm};
}

double cauchy_schwarz(double gcross_peak, double gss0, double gasas0) {
  if (!(gcross_peak > 0.0) || !(gss0 > 0.0) || !(gasas0 > 0.0)) {
    throw std::invalid_argument("cauchy_schwarz: correlation values must be positive");
  }
  return gcross_peak * gcross_peak / (gss0 * gasas0);
}

RatioWithError cauchy_schwarz(const RatioWithError& x, const RatioWithError& ss,
                              const RatioWithError& aa) {
  const double cs = cauchy_schwarz(x.value, ss.value, aa.value);
  const double rel = std::hypot(2.0 * x.std_error / x.value, ss.std_error / ss.value,
                                aa.std_error / aa.value);
  return {cs, cs * rel};
}

RatioWithError conditional_g2(const EventStreams& streams, double heralding_window_ns,
                              std::uint64_t split_seed) {
  if (!(heralding_window_ns > 0.0)) {
    throw std::invalid_argument("conditional_g2: heralding window must be positive");
  }
  if (streams.stokes.empty()) throw std::invalid_argument("conditional_g2: zero heralds");
  const auto det = virtual_beam_splitter(streams.antistokes, split_seed, "herald-split");
  const double w = heralding_window_ns * kSecondsPerNs;

  double n_b = 0.0, n_c = 0.0, n_bc = 0.0;
  for (double t : streams.stokes) {
    const bool b = count_in(det.first, t, t + w) > 0;
    const bool c = count_in(det.second, t, t + w) > 0;
    n_b += b;
    n_c += c;
    n_bc += b && c;
  }
  if (n_b == 0.0 || n_c == 0.0) {
    throw std::invalid_argument("conditional_g2: no heralded detections in one arm");
  }
  const double n_h = static_cast<double>(streams.stokes.size());
  const double g = n_h * n_bc / (n_b * n_c);
  const double err = n_bc > 0.0 ? g * std::sqrt(1.0 / n_bc + 1.0 / n_b + 1.0 / n_c)
                                : n_h / (n_b * n_c);
  return {g, err};
}

double phase_rmse(const ReconstructionResult& result, const ComplexEnvelope& truth,
                  double mask_threshold) {
  if (!same_lattice(result.grid, truth.grid())) {
    throw std::invalid_argument("phase_rmse: result and truth grids differ");
  }
  double peak = 0.0;
  for (std::size_t k = 0; k < truth.grid().n_bins; ++k) peak = std::max(peak, std::norm(truth[k]));
  std::vector<double> diffs;
  for (std::size_t k = 0; k < truth.grid().n_bins; ++k) {
    const double a2 = std::norm(truth[k]);
    if (!result.valid[k] || !(a2 > 0.0) || a2 < mask_threshold * peak) continue;
    diffs.push_back(wrap_angle(result.phase[k] - truth.phase(k)));
  }
  const auto offset = circular_mean(diffs);
  if (!offset) throw std::invalid_argument("phase_rmse: mask selects no bins");
  double ss = 0.0;
  for (double d : diffs) {
    const double e = wrap_angle(d - offset->mean);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(diffs.size()));
}

double waveform_fidelity(std::span<const Complex> a, std::span<const Complex> b,
                         const std::vector<bool>& mask, double bin_width_ns) {
  if (a.size() != b.size() || a.size() != mask.size()) {
    throw std::invalid_argument("waveform_fidelity: length mismatch");
  }
  Complex overlap{};
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!mask[k]) continue;
    overlap += std::conj(a[k]) * b[k];
    na += std::norm(a[k]);
    nb += std::norm(b[k]);
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("waveform_fidelity: zero norm");
  overlap *= bin_width_ns;
  return std::norm(overlap) / (na * bin_width_ns * nb * bin_width_ns);
}

std::vector<Complex> reconstructed_waveform(const ReconstructionResult& result) {
  std::vector<Complex> out(result.amplitude.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (result.valid[k]) out[k] = std::polar(result.amplitude[k], result.phase[k]);
  }
  return out;
}

double waveform_fidelity(const ReconstructionResult& result, const ComplexEnvelope& truth) {
  if (!same_lattice(result.grid, truth.grid())) {
    throw std::invalid_argument("waveform_fidelity: result and truth grids differ");
  }
  const auto rec = reconstructed_waveform(result);
  return waveform_fidelity(rec, truth.samples(), result.valid, result.grid.bin_width_ns);
}

}  // namespace biphoton
