#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "biphoton/interferometer.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/waveform.hpp"

namespace biphoton {

enum class Scenario { DegenerateRabi, NondegenerateRabi, Exponential, Custom };

std::string_view to_string(Scenario s);

// Threshold direction: a value passes when value <= limit (Max) or >= limit (Min).
enum class Bound { Max, Min };

struct Threshold {
  std::string key;
  double limit = 0.0;
  Bound bound = Bound::Max;
};

// Known threshold keys and their direction. Throws ConfigError on others.
Bound threshold_bound(const std::string& key);

// Flat key = value run description. Every field has a documented default;
// the scenario picks the waveform family and the default delta.
struct RunConfig {
  Scenario scenario = Scenario::DegenerateRabi;

  // waveform
  double rabi_omega_e = 0.0;  // rad/s, default 2 pi 50 MHz
  double rabi_gamma = 2e7;
  double rabi_phi0 = 0.0;
  double exp_gamma = 4e7;
  std::filesystem::path envelope_csv;  // custom scenario

  // grid, ns
  double grid_tau_min_ns = -200.0;
  double grid_tau_max_ns = 200.0;
  double bin_width_ns = 1.0;

  // source and acquisition
  double omega_s0 = 0.0;
  double delta_rad_per_s = 0.0;
  double pair_rate_per_s = 1e5;
  double eta = 0.1;
  double measure_time_s = 10.0;
  double background_per_bin = 0.0;
  double lambda0_rad = 0.0;
  bool noise_free = false;

  TomographyPlan plan;

  // event streams and metrics
  double singles_background_s_per_s = 1e5;
  double singles_background_as_per_s = 1e5;
  double stream_duration_s = 1.0;
  std::optional<double> heralding_window_ns;  // nullopt: waveform support
  double g2_window_ns = 10.0;  // auto-correlation half window
  std::optional<double> gcross_tau_ns;  // nullopt: peak bin

  std::uint64_t seed = 1;
  std::vector<Threshold> thresholds;

  // Keys that appeared explicitly in the file.
  std::set<std::string> explicit_keys;

  TimeGrid grid() const;
  SourceSpec source() const;
  AcquisitionConfig acquisition() const;
  // Checks every numeric constraint; throws ConfigError naming the field.
  void validate() const;
  // Canonical key = value listing of every field.
  std::string dump() const;
};

RunConfig default_config(Scenario s = Scenario::DegenerateRabi);

// Parses the text of a config file. Relative paths resolve against `base_dir`.
// Unknown keys, duplicate keys and malformed values throw ConfigError with the
// line number.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                       const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Applies one `key=value` override (used for --threshold).
void add_threshold(RunConfig& cfg, const std::string& assignment);

}  // namespace biphoton
