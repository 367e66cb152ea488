// biphoton: simulate, reconstruct and score two-photon interference tomography runs.

#include <CLI11.hpp>

#include <iostream>

#include "biphoton/commands.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kThreshold = 4 };

using namespace biphoton;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> thresholds;
};

void add_common(CLI::App* sub, Common& c, bool needs_out) {
  sub->add_option("--config", c.config, "run configuration (key = value)");
  sub->add_option("--seed", c.seed, "override the configured seed");
  auto* o = sub->add_option("--out", c.out, "output directory");
  if (needs_out) o->required();
  sub->add_option("--threshold", c.thresholds, "acceptance threshold key=value (repeatable)");
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  for (const auto& t : c.thresholds) add_threshold(cfg, t);
  return cfg;
}

void print_checks(const CommandResult& r) {
  for (const auto& c : r.checks) {
    std::cerr << (c.pass ? "pass " : "MISS ") << c.key << " = " << c.value
              << (c.bound == Bound::Max ? " <= " : " >= ") << c.limit << "\n";
  }
}

int finish(const CommandResult& r) {
  std::cout << r.report.dump(2) << "\n";
  print_checks(r);
  return r.thresholds_met() ? kOk : kThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal tomography of narrowband biphotons"};
  app.require_subcommand(1);

  Common sim_opts, rec_opts, met_opts, pipe_opts;
  auto* sim = app.add_subcommand("simulate", "write ground truth, histograms and event streams");
  add_common(sim, sim_opts, true);

  auto* rec = app.add_subcommand("reconstruct", "recover amplitude and phase from histograms");
  add_common(rec, rec_opts, false);
  std::string rec_in;
  std::vector<std::string> rec_files;
  rec->add_option("--in", rec_in, "directory written by simulate (or holding hist/*.csv)");
  rec->add_option("files", rec_files, "histogram CSV files (instead of --in)");

  auto* met = app.add_subcommand("metrics", "nonclassicality metrics from event streams");
  add_common(met, met_opts, false);
  std::string met_events;
  met->add_option("--events", met_events, "event CSV (channel,time_s)")->required();

  auto* pipe = app.add_subcommand("pipeline", "simulate, reconstruct and score in one run");
  add_common(pipe, pipe_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) {
      const auto cfg = load(sim_opts);
      return finish(cmd_simulate(cfg, sim_opts.out));
    }
    if (*rec) {
      const auto cfg = load(rec_opts);
      if (rec_in.empty() == rec_files.empty()) {
        throw ConfigError("reconstruct: give either --in DIR or a list of histogram files");
      }
      std::optional<double> T_s, T_l;
      if (cfg.explicit_keys.contains("T_s_ns")) T_s = cfg.plan.T_s_ns;
      if (cfg.explicit_keys.contains("T_l_ns")) T_l = cfg.plan.T_l_ns;
      std::vector<fs::path> files(rec_files.begin(), rec_files.end());
      const auto inputs = rec_in.empty() ? load_input_files(files, T_s, T_l)
                                         : load_inputs(rec_in, T_s, T_l);
      const fs::path out = !rec_opts.out.empty() ? fs::path(rec_opts.out)
                           : !rec_in.empty()     ? fs::path(rec_in) / "reconstruction"
                                                 : fs::path("reconstruction");
      return finish(cmd_reconstruct(inputs, cfg, out));
    }
    if (*met) {
      const auto cfg = load(met_opts);
      const auto events = io::parse_events(io::read_file(met_events), met_events);
      const fs::path out = !met_opts.out.empty() ? fs::path(met_opts.out)
                                                 : fs::path(met_events).parent_path() / "metrics";
      return finish(cmd_metrics(events, cfg, out));
    }
    if (*pipe) {
      const auto cfg = load(pipe_opts);
      return finish(cmd_pipeline(cfg, pipe_opts.out));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const StageError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
