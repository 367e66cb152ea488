#include "biphoton/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "biphoton/angles.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "biphoton/rng.hpp"

namespace biphoton {
namespace {

std::string fmt_ns(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// Collects output files, writes them, and records a manifest with content
// hashes. When the directory already holds a manifest with the same
// fingerprint, the new hashes must match the old ones.
class OutputSet {
 public:
  void add(const std::string& rel, std::string content) { files_[rel] = std::move(content); }

  json commit(const fs::path& dir, const std::string& fingerprint, json meta) {
    std::optional<json> previous;
    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      try {
        previous = json::parse(io::read_file(manifest_path));
      } catch (const json::exception&) {
        previous.reset();
      }
    }
    json files = json::object();
    for (const auto& [rel, content] : files_) {
      files[rel] = {{"fnv1a64", io::content_hash(content)}, {"bytes", content.size()}};
    }
    std::optional<bool> verified;
    if (previous && previous->value("fingerprint", "") == fingerprint &&
        previous->contains("files")) {
      verified = true;
      for (const auto& [rel, entry] : files.items()) {
        const auto& old = (*previous)["files"];
        if (!old.contains(rel) || old[rel].value("fnv1a64", "") != entry["fnv1a64"]) {
          throw DataError("rerun with an identical configuration produced different content for " +
                          rel);
        }
      }
    }
    for (const auto& [rel, content] : files_) io::write_file(dir / rel, content);
    meta["fingerprint"] = fingerprint;
    meta["files"] = files;
    io::write_file(manifest_path, meta.dump(2) + "\n");
    json summary = {{"manifest", manifest_path.string()}, {"files", files_.size()}};
    summary["rerun_verified"] = verified ? json(*verified) : json(nullptr);
    return summary;
  }

 private:
  std::map<std::string, std::string> files_;
};

std::string panel_amplitude(const ReconstructionResult& r, const CoincidenceHistogram& c12) {
  std::string out = "tau_ns,c12_counts,amplitude\n";
  char buf[96];
  for (std::size_t k = 0; k < r.grid.n_bins; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", r.grid.center(k), c12.values[k],
                  r.amplitude[k]);
    out += buf;
  }
  return out;
}

std::string panel_xi(const ReconstructionResult& r) {
  std::string out = "tau_ns,xi_short_rad,xi_long_rad\n";
  auto cell = [](const XiProfile& x, std::size_t k) {
    if (!x.valid[k]) return std::string("nan");
    char b[32];
    std::snprintf(b, sizeof b, "%.12g", x.xi[k]);
    return std::string(b);
  };
  char buf[32];
  for (std::size_t k = 0; k < r.grid.n_bins; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", r.grid.center(k));
    out += std::string(buf) + "," + cell(r.xi_short, k) + "," + cell(r.xi_long, k) + "\n";
  }
  return out;
}

std::string panel_phase(const ReconstructionResult& r, const std::optional<ComplexEnvelope>& truth) {
  std::string out = truth ? "tau_ns,phase_rad,truth_phase_rad\n" : "tau_ns,phase_rad\n";
  char buf[96];
  for (std::size_t k = 0; k < r.grid.n_bins; ++k) {
    if (!r.valid[k]) continue;
    if (truth) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", r.grid.center(k), r.phase[k],
                    truth->phase(k));
    } else {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", r.grid.center(k), r.phase[k]);
    }
    out += buf;
  }
  return out;
}

// Offsets between consecutive islands of one component, measured at each
// island's peak-amplitude valid bin.
json island_report(const ReconstructionResult& r) {
  json out = json::array();
  for (std::size_t i = 0; i < r.islands.size(); ++i) {
    const auto& I = r.islands[i];
    std::optional<std::size_t> peak;
    for (std::size_t k = I.first; k <= I.last; ++k) {
      if (r.valid[k] && (!peak || r.amplitude[k] > r.amplitude[*peak])) peak = k;
    }
    out.push_back({{"first_tau_ns", r.grid.center(I.first)},
                   {"last_tau_ns", r.grid.center(I.last)},
                   {"component", r.components[i]},
                   {"peak_tau_ns", peak ? json(r.grid.center(*peak)) : json(nullptr)},
                   {"peak_phase_rad", peak ? json(r.phase[*peak]) : json(nullptr)}});
  }
  return out;
}

}  // namespace

ComplexEnvelope build_envelope(const RunConfig& cfg) {
  try {
    switch (cfg.scenario) {
      case Scenario::DegenerateRabi:
      case Scenario::NondegenerateRabi:
        return damped_rabi_envelope(RabiParams{cfg.rabi_omega_e, cfg.rabi_gamma, cfg.rabi_phi0},
                                    cfg.grid());
      case Scenario::Exponential:
        return exponential_envelope(cfg.exp_gamma, cfg.grid());
      case Scenario::Custom:
        return io::parse_envelope(io::read_file(cfg.envelope_csv), cfg.envelope_csv.string());
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("waveform: ") + e.what());
  }
  throw ConfigError("unknown scenario");
}

Simulation simulate(const RunConfig& cfg) {
  cfg.validate();
  const ComplexEnvelope truth = build_envelope(cfg);
  const TimeGrid grid = truth.grid();
  if (!grid.symmetric()) throw ConfigError("envelope_csv: grid must be symmetric about tau = 0");
  try {
    cfg.plan.validate(grid.bin_width_ns);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const SourceSpec src = cfg.source();
  AcquisitionConfig acq = cfg.acquisition();
  acq.bin_width_s = grid.bin_width_ns * kSecondsPerNs;

  SixPack ps = expected_sixpack(truth, src, cfg.plan.T_s_ns, acq, grid, cfg.lambda0_rad);
  SixPack pl = expected_sixpack(truth, src, cfg.plan.T_l_ns, acq, grid, cfg.lambda0_rad);
  CoincidenceHistogram c12 = source_coincidence(truth, src, acq, grid);
  if (!cfg.noise_free) {
    ps = sample_sixpack(ps, cfg.seed);
    pl = sample_sixpack(pl, cfg.seed);
    c12 = sample_histogram(c12, cfg.seed);
  }
  EventStreams ev = generate_event_streams(truth, src, acq, cfg.singles_background_s_per_s,
                                           cfg.singles_background_as_per_s,
                                           cfg.stream_duration_s, cfg.seed);
  return Simulation{truth, std::move(ps), std::move(pl), std::move(c12), std::move(ev)};
}

std::string histogram_filename(const CoincidenceHistogram& h) {
  if (!h.setting3) return "hist/C12.csv";
  return "hist/T" + fmt_ns(h.delay_ns) + "ns_" + h.label() + ".csv";
}

ReconstructInputs group_histograms(const std::vector<CoincidenceHistogram>& hists,
                                   std::optional<double> T_s, std::optional<double> T_l) {
  std::optional<CoincidenceHistogram> c12;
  std::set<double> delays;
  for (const auto& h : hists) {
    if (!h.setting3) {
      if (c12) throw DataError("more than one C12 (settings none) histogram");
      c12 = h;
      continue;
    }
    if (!six_row_of(h.setting3->label, h.setting4->label)) {
      throw DataError("histogram " + h.label() + " at T = " + fmt_ns(h.delay_ns) +
                      " ns is not one of the six projection settings");
    }
    delays.insert(h.delay_ns);
  }
  if (!c12) throw DataError("missing C12 histogram (setting3=none, setting4=none)");

  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, b); };
  if (!T_s || !T_l) {
    if (delays.size() != 2) {
      throw DataError("expected six-packs at exactly two delays, found " +
                      std::to_string(delays.size()));
    }
    if (!T_s) T_s = *delays.begin();
    if (!T_l) T_l = *delays.rbegin();
  }

  auto pack_at = [&](double T) {
    std::array<std::optional<CoincidenceHistogram>, 6> rows;
    for (const auto& h : hists) {
      if (!h.setting3 || !near(h.delay_ns, T)) continue;
      const auto row = *six_row_of(h.setting3->label, h.setting4->label);
      auto& slot = rows[static_cast<std::size_t>(row)];
      if (slot) throw DataError("duplicate histogram " + h.label() + " at T = " + fmt_ns(T) + " ns");
      slot = h;
    }
    SixPack p;
    for (auto row : kSixRows) {
      auto& slot = rows[static_cast<std::size_t>(row)];
      if (!slot) {
        const auto [a, b] = settings_of(row);
        throw DataError("missing histogram for setting (" + std::string(to_string(a)) + "," +
                        std::string(to_string(b)) + ") at T = " + fmt_ns(T) + " ns");
      }
      p[row] = *slot;
    }
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("six-pack at T = ") + fmt_ns(T) + " ns: " + e.what());
    }
    return p;
  };

  ReconstructInputs in{pack_at(*T_s), pack_at(*T_l), *c12, {}, {}, {}, {}};
  if (!same_lattice(in.short_pack.grid(), in.c12.grid) ||
      !same_lattice(in.long_pack.grid(), in.c12.grid)) {
    throw DataError("grid mismatch between six-packs and C12");
  }
  return in;
}

ReconstructInputs load_input_files(const std::vector<fs::path>& files, std::optional<double> T_s,
                                   std::optional<double> T_l) {
  std::vector<CoincidenceHistogram> hists;
  for (const auto& f : files) hists.push_back(io::parse_histogram(io::read_file(f), f.string()));
  return group_histograms(hists, T_s, T_l);
}

ReconstructInputs load_inputs(const fs::path& dir, std::optional<double> T_s,
                              std::optional<double> T_l) {
  if (!fs::is_directory(dir)) throw DataError("input directory not found: " + dir.string());
  std::optional<json> manifest;
  if (fs::exists(dir / "manifest.json")) {
    try {
      manifest = json::parse(io::read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
      throw DataError("manifest.json: " + std::string(e.what()));
    }
    const json listed = manifest->value("files", json::object());
    for (const auto& [rel, entry] : listed.items()) {
      if (!fs::exists(dir / rel)) continue;
      if (io::content_hash(io::read_file(dir / rel)) != entry.value("fnv1a64", "")) {
        throw DataError(rel + ": content hash does not match manifest.json");
      }
    }
  }

  const fs::path hist_dir = fs::is_directory(dir / "hist") ? dir / "hist" : dir;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(hist_dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    const auto name = e.path().filename().string();
    if (hist_dir == dir && (name == "truth_envelope.csv" || name == "events.csv")) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  auto in = load_input_files(files, T_s, T_l);

  if (fs::exists(dir / "truth_envelope.csv")) {
    in.truth = io::parse_envelope(io::read_file(dir / "truth_envelope.csv"),
                                  (dir / "truth_envelope.csv").string());
  }
  if (manifest) {
    if (manifest->contains("delta_rad_per_s")) in.true_delta = (*manifest)["delta_rad_per_s"].get<double>();
    if (manifest->contains("lambda0_rad")) in.true_lambda0 = (*manifest)["lambda0_rad"].get<double>();
    if (manifest->contains("background_per_bin")) {
      in.background = (*manifest)["background_per_bin"].get<double>();
    }
  }
  return in;
}

std::vector<ThresholdCheck> check_thresholds(const std::vector<Threshold>& thresholds,
                                             const std::map<std::string, double>& values,
                                             const std::string& command) {
  std::vector<ThresholdCheck> out;
  for (const auto& t : thresholds) {
    const auto it = values.find(t.key);
    if (it == values.end()) {
      throw ConfigError("threshold." + t.key + ": not produced by " + command);
    }
    const double v = it->second;
    const bool pass = t.bound == Bound::Max ? v <= t.limit : v >= t.limit;
    out.push_back({t.key, v, t.limit, t.bound, pass && std::isfinite(v)});
  }
  return out;
}

bool all_pass(const std::vector<ThresholdCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

namespace {

json checks_json(const std::vector<ThresholdCheck>& checks) {
  json a = json::array();
  for (const auto& c : checks) {
    a.push_back({{"key", c.key},
                 {"value", c.value},
                 {"limit", c.limit},
                 {"bound", c.bound == Bound::Max ? "max" : "min"},
                 {"pass", c.pass}});
  }
  return a;
}

std::string fingerprint(const std::string& command, const RunConfig& cfg, const std::string& extra) {
  return io::hex64(fnv1a(extra, fnv1a(cfg.dump(), fnv1a(command))));
}

}  // namespace

CommandResult cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const Simulation sim = simulate(cfg);
  OutputSet out;
  out.add("truth_envelope.csv", io::format_envelope(sim.truth));
  for (const auto* pack : {&sim.short_pack, &sim.long_pack}) {
    for (const auto& h : pack->rows) out.add(histogram_filename(h), io::format_histogram(h));
  }
  out.add(histogram_filename(sim.c12), io::format_histogram(sim.c12));
  out.add("events.csv", io::format_events(sim.events));

  json meta = {{"command", "simulate"},
               {"scenario", std::string(to_string(cfg.scenario))},
               {"seed", cfg.seed},
               {"delta_rad_per_s", cfg.delta_rad_per_s},
               {"lambda0_rad", cfg.lambda0_rad},
               {"background_per_bin", cfg.background_per_bin},
               {"T_s_ns", cfg.plan.T_s_ns},
               {"T_l_ns", cfg.plan.T_l_ns},
               {"noise_free", cfg.noise_free},
               {"total_c12_counts", sim.c12.total()},
               {"config", cfg.dump()}};
  json files = out.commit(out_dir, fingerprint("simulate", cfg, ""), meta);
  meta.erase("config");
  meta["output"] = files;
  return {meta, {}, std::nullopt};
}

CommandResult cmd_reconstruct(const ReconstructInputs& in, const RunConfig& cfg,
                              const fs::path& out_dir) {
  TomographyPlan plan = cfg.plan;
  plan.T_s_ns = in.short_pack.delay_ns();
  plan.T_l_ns = in.long_pack.delay_ns();
  if (!cfg.explicit_keys.contains("background_subtract") && in.background) {
    plan.background = *in.background;
  }
  const ReconstructionResult r = reconstruct(in.short_pack, in.long_pack, in.c12, plan);

  std::map<std::string, double> values;
  json summary = {{"delta_hat_rad_per_s", r.delta_hat},
                  {"lambda0_hat_rad", r.lambda0_hat},
                  {"lambda0_stderr_rad", r.lambda0_stderr},
                  {"lambda0_long_rad", r.lambda0_long},
                  {"delta_short_rad_per_s", r.delta_short},
                  {"xi_jump_long_rad", r.jump_long},
                  {"T_s_ns", plan.T_s_ns},
                  {"T_l_ns", plan.T_l_ns},
                  {"reference_tau_ns", r.grid.center(r.reference_bin)},
                  {"islands", island_report(r)}};
  summary["rmse_vs_truth"] = nullptr;
  if (in.truth) {
    const double rmse = phase_rmse(r, *in.truth, 0.1);
    const double fid = waveform_fidelity(r, *in.truth);
    summary["rmse_vs_truth"] = rmse;
    summary["fidelity_vs_truth"] = fid;
    values["phase_rmse_rad"] = rmse;
    values["fidelity"] = fid;
  }
  if (in.true_delta) {
    const double abs_err = std::abs(r.delta_hat - *in.true_delta);
    values["delta_abs_error_rad_per_s"] = abs_err;
    summary["delta_abs_error_rad_per_s"] = abs_err;
    if (*in.true_delta != 0.0) {
      values["delta_rel_error"] = abs_err / std::abs(*in.true_delta);
      summary["delta_rel_error"] = values["delta_rel_error"];
    }
  }
  if (in.true_lambda0) {
    values["lambda0_error_rad"] = std::abs(wrap_angle(r.lambda0_hat - *in.true_lambda0));
    summary["lambda0_error_rad"] = values["lambda0_error_rad"];
  }
  auto checks = check_thresholds(cfg.thresholds, values, "reconstruct");
  summary["thresholds"] = checks_json(checks);

  OutputSet out;
  out.add("reconstruction.csv", io::format_result(r));
  out.add("summary.json", summary.dump(2) + "\n");
  out.add("panel_amplitude.csv", panel_amplitude(r, in.c12));
  out.add("panel_xi.csv", panel_xi(r));
  out.add("panel_phase.csv", panel_phase(r, in.truth));
  std::string input_key = io::format_histogram(in.c12);
  for (const auto* p : {&in.short_pack, &in.long_pack}) {
    for (const auto& h : p->rows) input_key += io::content_hash(io::format_histogram(h));
  }
  summary["output"] = out.commit(out_dir, fingerprint("reconstruct", cfg, input_key),
                                 {{"command", "reconstruct"}});
  return {summary, checks, r};
}

MetricsReport compute_metrics(const EventStreams& ev, const RunConfig& cfg) {
  MetricsReport m;
  if (ev.stokes.empty() || ev.antistokes.empty()) throw DataError("events: a stream is empty");
  m.cross = cross_g2(ev, cfg.grid());
  const auto& g = m.cross.grid;
  std::size_t peak = m.cross.peak_bin();
  if (cfg.gcross_tau_ns) {
    const auto b = g.bin_of(*cfg.gcross_tau_ns);
    if (!b) throw ConfigError("gcross_tau_ns: outside the correlation grid");
    peak = *b;
  }
  m.gcross_tau_ns = g.center(peak);
  m.gcross_peak = {m.cross.g2[peak], m.cross.std_error[peak]};
  m.gss0 = auto_g2_zero(ev.stokes, ev.duration_s, derive_stream(cfg.seed, "metrics:s")(),
                        cfg.g2_window_ns);
  m.gasas0 = auto_g2_zero(ev.antistokes, ev.duration_s, derive_stream(cfg.seed, "metrics:as")(),
                          cfg.g2_window_ns);
  if (!(m.gss0.value > 0.0) || !(m.gasas0.value > 0.0)) {
    throw DataError("auto-correlation found no coincidences within +-" + fmt_ns(cfg.g2_window_ns) +
                    " ns; use longer streams or a wider g2_window_ns");
  }
  m.cs = cauchy_schwarz(m.gcross_peak, m.gss0, m.gasas0);

  if (cfg.heralding_window_ns) {
    m.heralding_window_ns = *cfg.heralding_window_ns;
  } else {
    // Waveform support: the last tau > 0 bin whose excess correlation reaches
    // the island threshold of the peak excess.
    const double excess_peak = m.cross.g2[m.cross.peak_bin()] - 1.0;
    double edge = 0.0;
    for (std::size_t k = 0; k < g.n_bins; ++k) {
      if (g.center(k) > 0.0 && m.cross.g2[k] - 1.0 >= cfg.plan.island_threshold * excess_peak) {
        edge = g.center(k) + 0.5 * g.bin_width_ns;
      }
    }
    m.heralding_window_ns = edge > 0.0 ? edge : g.tau_max_ns();
  }
  m.gc = conditional_g2(ev, m.heralding_window_ns, derive_stream(cfg.seed, "metrics:herald")());
  return m;
}

CommandResult cmd_metrics(const EventStreams& ev, const RunConfig& cfg, const fs::path& out_dir,
                          const std::optional<ReconstructionResult>& result,
                          const std::optional<ComplexEnvelope>& truth) {
  const MetricsReport m = compute_metrics(ev, cfg);
  json report = {{"cs", m.cs.value},
                 {"cs_err", m.cs.std_error},
                 {"gc", m.gc.value},
                 {"gc_err", m.gc.std_error},
                 {"gcross_peak", m.gcross_peak.value},
                 {"gcross_peak_err", m.gcross_peak.std_error},
                 {"gcross_tau_ns", m.gcross_tau_ns},
                 {"gss0", m.gss0.value},
                 {"gss0_err", m.gss0.std_error},
                 {"gasas0", m.gasas0.value},
                 {"gasas0_err", m.gasas0.std_error},
                 {"heralding_window_ns", m.heralding_window_ns},
                 {"fidelity", nullptr},
                 {"phase_rmse_rad", nullptr}};
  std::map<std::string, double> values = {{"cs", m.cs.value}, {"gc", m.gc.value}};
  if (result && truth) {
    const double fid = waveform_fidelity(*result, *truth);
    const double rmse = phase_rmse(*result, *truth, 0.1);
    report["fidelity"] = fid;
    report["phase_rmse_rad"] = rmse;
    values["fidelity"] = fid;
    values["phase_rmse_rad"] = rmse;
  }
  auto checks = check_thresholds(cfg.thresholds, values, "metrics");
  report["thresholds"] = checks_json(checks);

  std::string cross = "tau_ns,g2,std_error,coincidences\n";
  char buf[128];
  for (std::size_t k = 0; k < m.cross.grid.n_bins; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", m.cross.grid.center(k),
                  m.cross.g2[k], m.cross.std_error[k], m.cross.coincidences[k]);
    cross += buf;
  }
  OutputSet out;
  out.add("metrics.json", report.dump(2) + "\n");
  out.add("cross_g2.csv", cross);
  report["output"] = out.commit(out_dir, fingerprint("metrics", cfg, io::content_hash(io::format_events(ev))),
                                {{"command", "metrics"}});
  return {report, checks, std::nullopt};
}

CommandResult cmd_pipeline(const RunConfig& cfg, const fs::path& out_dir) {
  json report = {{"command", "pipeline"}, {"scenario", std::string(to_string(cfg.scenario))},
                 {"seed", cfg.seed}};
  auto stage = [&](const char* name, auto&& f) {
    try {
      return f();
    } catch (const StageError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };
  RunConfig quiet = cfg;
  quiet.thresholds.clear();

  report["simulate"] = stage("simulate", [&] { return cmd_simulate(quiet, out_dir).report; });
  const auto inputs = stage("load", [&] {
    return load_inputs(out_dir, cfg.plan.T_s_ns, cfg.plan.T_l_ns);
  });
  auto rec = stage("reconstruct", [&] {
    return cmd_reconstruct(inputs, quiet, out_dir / "reconstruction");
  });
  report["reconstruct"] = rec.report;

  const auto events = io::parse_events(io::read_file(out_dir / "events.csv"),
                                       (out_dir / "events.csv").string());
  auto met = stage("metrics", [&] {
    return cmd_metrics(events, quiet, out_dir / "metrics", rec.reconstruction, inputs.truth);
  });
  report["metrics"] = met.report;

  std::map<std::string, double> values;
  for (const char* k : {"phase_rmse_rad", "fidelity", "delta_rel_error",
                        "delta_abs_error_rad_per_s", "lambda0_error_rad"}) {
    if (rec.report.contains(k) && rec.report[k].is_number()) values[k] = rec.report[k].get<double>();
  }
  if (rec.report["rmse_vs_truth"].is_number()) values["phase_rmse_rad"] = rec.report["rmse_vs_truth"].get<double>();
  if (rec.report.contains("fidelity_vs_truth")) values["fidelity"] = rec.report["fidelity_vs_truth"].get<double>();
  values["cs"] = met.report["cs"].get<double>();
  values["gc"] = met.report["gc"].get<double>();

  auto checks = check_thresholds(cfg.thresholds, values, "pipeline");
  report["thresholds"] = checks_json(checks);
  report["pass"] = all_pass(checks);
  io::write_file(out_dir / "report.json", report.dump(2) + "\n");
  return {report, checks, std::nullopt};
}

}  // namespace biphoton
