#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biphoton/config.hpp"
#include "biphoton/interferometer.hpp"
#include "biphoton/metrics.hpp"
#include "biphoton/tomography.hpp"

namespace biphoton {

namespace fs = std::filesystem;
using nlohmann::json;

// Everything a simulation run produces, before it is written out.
struct Simulation {
  ComplexEnvelope truth;
  SixPack short_pack;
  SixPack long_pack;
  CoincidenceHistogram c12;
  EventStreams events;
};

ComplexEnvelope build_envelope(const RunConfig& cfg);
Simulation simulate(const RunConfig& cfg);

// Histogram file names used by simulate, e.g. hist/T1ns_DR.csv, hist/C12.csv.
std::string histogram_filename(const CoincidenceHistogram& h);

struct ReconstructInputs {
  SixPack short_pack;
  SixPack long_pack;
  CoincidenceHistogram c12;
  std::optional<ComplexEnvelope> truth;
  std::optional<double> true_delta;
  std::optional<double> true_lambda0;
  std::optional<double> background;  // per bin, from the manifest
};

// Groups histogram files into the two six-packs and C12. The delays come from
// `T_s`/`T_l` when given, otherwise from the two distinct T values present.
// A missing projection row is reported by its settings, e.g. "(D,R)".
ReconstructInputs group_histograms(const std::vector<CoincidenceHistogram>& hists,
                                   std::optional<double> T_s, std::optional<double> T_l);

// Reads DIR/hist/*.csv (or DIR/*.csv), DIR/truth_envelope.csv and
// DIR/manifest.json when present. Files listed in the manifest are hash-checked.
ReconstructInputs load_inputs(const fs::path& dir, std::optional<double> T_s,
                              std::optional<double> T_l);
ReconstructInputs load_input_files(const std::vector<fs::path>& files, std::optional<double> T_s,
                                   std::optional<double> T_l);

struct ThresholdCheck {
  std::string key;
  double value = 0.0;
  double limit = 0.0;
  Bound bound = Bound::Max;
  bool pass = false;
};

// Throws ConfigError when a threshold names a quantity the command did not produce.
std::vector<ThresholdCheck> check_thresholds(const std::vector<Threshold>& thresholds,
                                             const std::map<std::string, double>& values,
                                             const std::string& command);
bool all_pass(const std::vector<ThresholdCheck>& checks);

struct CommandResult {
  json report;
  std::vector<ThresholdCheck> checks;
  std::optional<ReconstructionResult> reconstruction;  // set by cmd_reconstruct
  bool thresholds_met() const { return all_pass(checks); }
};

CommandResult cmd_simulate(const RunConfig& cfg, const fs::path& out_dir);
CommandResult cmd_reconstruct(const ReconstructInputs& inputs, const RunConfig& cfg,
                              const fs::path& out_dir);
CommandResult cmd_metrics(const EventStreams& events, const RunConfig& cfg,
                          const fs::path& out_dir,
                          const std::optional<ReconstructionResult>& result = std::nullopt,
                          const std::optional<ComplexEnvelope>& truth = std::nullopt);
CommandResult cmd_pipeline(const RunConfig& cfg, const fs::path& out_dir);

// Metric values computed from event streams.
struct MetricsReport {
  RatioWithError gcross_peak;
  double gcross_tau_ns = 0.0;
  RatioWithError gss0;
  RatioWithError gasas0;
  RatioWithError cs;
  RatioWithError gc;
  double heralding_window_ns = 0.0;
  CorrelationEstimate cross;
};
MetricsReport compute_metrics(const EventStreams& events, const RunConfig& cfg);

}  // namespace biphoton
