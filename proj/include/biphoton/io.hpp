#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "biphoton/interferometer.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/waveform.hpp"

namespace biphoton::io {

namespace fs = std::filesystem;

// Envelope CSV: header `tau_ns,re,im`, one row per bin, 12 significant digits.
std::string format_envelope(const ComplexEnvelope& env);
ComplexEnvelope parse_envelope(const std::string& text, const std::string& source = "<envelope>");

// Histogram CSV: `# T_ns=`, `# setting3=`, `# setting4=`, `# kind=` comment
// lines, then `tau_ns,counts`. The source histogram uses `none` for settings.
std::string format_histogram(const CoincidenceHistogram& h);
CoincidenceHistogram parse_histogram(const std::string& text,
                                     const std::string& source = "<histogram>");

// Event CSV: optional `# duration_s=` line, then `channel,time_s` rows with
// channel s or as. Without a duration line the last tag sets the duration.
std::string format_events(const EventStreams& ev);
EventStreams parse_events(const std::string& text, const std::string& source = "<events>");

// `tau_ns,amplitude,phase_rad,valid`.
std::string format_result(const ReconstructionResult& r);

std::string read_file(const fs::path& p);
// Throws ConfigError when the file cannot be written.
void write_file(const fs::path& p, const std::string& content);

// Rebuilds the grid of uniformly spaced bin centers. Throws DataError.
TimeGrid grid_from_centers(const std::vector<double>& centers, const std::string& source);

std::string hex64(std::uint64_t h);
std::string content_hash(const std::string& content);

}  // namespace biphoton::io
