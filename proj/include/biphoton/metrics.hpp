#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "biphoton/interferometer.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/waveform.hpp"

namespace biphoton {

struct CorrelationEstimate {
  TimeGrid grid;  // tau = t_as - t_s, ns
  std::vector<double> g2;
  std::vector<double> std_error;
  std::vector<double> coincidences;

  std::size_t peak_bin() const;
};

struct RatioWithError {
  double value = 0.0;
  double std_error = 0.0;
};

// Normalized cross-correlation g_{s,as}(tau) = N_c(tau) D / (N_s N_as dtau).
CorrelationEstimate cross_g2(const EventStreams& streams, const TimeGrid& grid);

// g2(0) of one stream from a seeded 50/50 virtual beam splitter: coincidences
// between the halves within +-window, normalized by the accidental rate.
RatioWithError auto_g2_zero(std::span<const double> tags, double duration_s,
                            std::uint64_t split_seed, double window_ns);

// CS = g_cross^2 / (g_ss g_asas). Throws on non-positive inputs.
double cauchy_schwarz(double gcross_peak, double gss0, double gasas0);
RatioWithError cauchy_schwarz(const RatioWithError& gcross_peak, const RatioWithError& gss0,
                              const RatioWithError& gasas0);

// Heralded autocorrelation of the anti-Stokes arm: each Stokes tag opens
// [t, t + window]; the anti-Stokes stream is split 50/50 into detectors b, c.
// g_c = N_h N_hbc / (N_hb N_hc).
RatioWithError conditional_g2(const EventStreams& streams, double heralding_window_ns,
                              std::uint64_t split_seed);

// RMS of wrap(phi_rec - phi_truth - c) over valid bins with A_truth^2 >=
// mask_threshold * peak, with c the circular mean of the difference.
double phase_rmse(const ReconstructionResult& result, const ComplexEnvelope& truth,
                  double mask_threshold);

// |<rec|truth>|^2 / (<rec|rec> <truth|truth>) over bins where `mask` is set.
double waveform_fidelity(std::span<const Complex> a, std::span<const Complex> b,
                         const std::vector<bool>& mask, double bin_width_ns);
double waveform_fidelity(const ReconstructionResult& result, const ComplexEnvelope& truth);

// The reconstructed waveform A exp(i phi), zero where not valid.
std::vector<Complex> reconstructed_waveform(const ReconstructionResult& result);

}  // namespace biphoton
