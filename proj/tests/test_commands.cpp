#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "biphoton/commands.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"
#include "support.hpp"

using namespace biphoton;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biphoton_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    n += e.is_regular_file() && e.path().extension() == ext;
  }
  return n;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BIPHOTON_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("simulate writes the histogram set and a manifest") {
  const auto dir = scratch("sim");
  const auto r = cmd_simulate(default_config(), dir);
  CHECK(count_files(dir / "hist", ".csv") == 13);
  CHECK(fs::exists(dir / "truth_envelope.csv"));
  CHECK(fs::exists(dir / "events.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  const auto m = json::parse(io::read_file(dir / "manifest.json"));
  CHECK(m["delta_rad_per_s"].get<double>() == 0.0);
  CHECK(m["files"].size() == 15);
  CHECK(r.report["output"]["rerun_verified"].is_null());

  SUBCASE("same seed is byte-identical and the rerun verifies") {
    const auto other = scratch("sim2");
    cmd_simulate(default_config(), other);
    for (const auto& [rel, entry] : m["files"].items()) {
      CHECK(io::read_file(dir / rel) == io::read_file(other / rel));
    }
    const auto again = cmd_simulate(default_config(), dir);
    CHECK(again.report["output"]["rerun_verified"] == true);
  }
  SUBCASE("a different seed changes the sampled data") {
    auto cfg = default_config();
    cfg.seed = 2;
    const auto other = scratch("sim3");
    cmd_simulate(cfg, other);
    CHECK(io::read_file(dir / "hist/T1ns_DR.csv") != io::read_file(other / "hist/T1ns_DR.csv"));
  }
}

TEST_CASE("reconstruct from simulate output") {
  const auto dir = scratch("rec");
  cmd_simulate(default_config(), dir);
  const auto in = load_inputs(dir, std::nullopt, std::nullopt);
  CHECK(in.short_pack.delay_ns() == 1.0);
  CHECK(in.long_pack.delay_ns() == 5.8);
  REQUIRE(in.truth.has_value());
  const auto r = cmd_reconstruct(in, default_config(), dir / "reconstruction");
  CHECK(r.report["rmse_vs_truth"].get<double>() < 0.15);
  for (const char* f : {"reconstruction.csv", "summary.json", "panel_amplitude.csv", "panel_xi.csv",
                        "panel_phase.csv", "manifest.json"}) {
    CHECK(fs::exists(dir / "reconstruction" / f));
  }
  const auto csv = io::read_file(dir / "reconstruction/reconstruction.csv");
  CHECK(csv.rfind("tau_ns,amplitude,phase_rad,valid\n", 0) == 0);

  SUBCASE("a missing setting is named") {
    fs::remove(dir / "hist/T1ns_DR.csv");
    const auto msg = message_of([&] { load_inputs(dir, std::nullopt, std::nullopt); });
    CHECK(msg.find("(D,R)") != std::string::npos);
  }
  SUBCASE("tampered files fail the manifest check") {
    std::ofstream(dir / "hist/T1ns_DD.csv", std::ios::app) << "# edited\n";
    CHECK_THROWS_AS(load_inputs(dir, std::nullopt, std::nullopt), DataError);
  }
}

TEST_CASE("externally supplied histograms at 1 ns bins, T = 1 and 5.8 ns") {
  // Files without a manifest or truth, passed as a list.
  const auto src_dir = scratch("ext_src");
  cmd_simulate(default_config(), src_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(src_dir / "hist")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const auto in = load_input_files(files, std::nullopt, std::nullopt);
  const auto r = cmd_reconstruct(in, default_config(), scratch("ext_out"));
  CHECK(r.report["islands"].size() >= 3);
  CHECK(r.report["rmse_vs_truth"].is_null());
}

TEST_CASE("grid mismatch between histograms") {
  const auto dir = scratch("mismatch");
  cmd_simulate(default_config(), dir);
  std::vector<CoincidenceHistogram> hists;
  for (const auto& e : fs::directory_iterator(dir / "hist")) {
    hists.push_back(io::parse_histogram(io::read_file(e.path())));
  }
  for (auto& h : hists) {
    if (h.label() == "source") {
      h.grid = make_time_grid(-100, 100, 1);
      h.values.resize(200);
    }
  }
  CHECK(message_of([&] { group_histograms(hists, std::nullopt, std::nullopt); }).find("grid") !=
        std::string::npos);
}

TEST_CASE("metrics from an event file") {
  const auto dir = scratch("met");
  cmd_simulate(default_config(), dir);
  const auto ev = io::parse_events(io::read_file(dir / "events.csv"));
  const auto r = cmd_metrics(ev, default_config(), dir / "metrics");
  for (const char* k : {"cs", "cs_err", "gc", "gc_err", "gcross_peak", "gss0", "gasas0", "fidelity",
                        "phase_rmse_rad"}) {
    CHECK(r.report.contains(k));
  }
  CHECK(r.report["cs"].get<double>() > 10.0);
  CHECK(r.report["gc"].get<double>() < 0.5);
}

TEST_CASE("pipeline thresholds") {
  SUBCASE("noise-free degenerate Rabi meets phase_rmse <= 1e-3") {
    auto cfg = default_config();
    cfg.noise_free = true;
    add_threshold(cfg, "phase_rmse_rad=1e-3");
    const auto r = cmd_pipeline(cfg, scratch("pipe_nf"));
    CHECK(r.thresholds_met());
    CHECK(fs::exists(scratch("pipe_nf").parent_path()));
  }
  SUBCASE("slashing the count budget 100x misses the same thresholds") {
    auto cfg = default_config();
    add_threshold(cfg, "phase_rmse_rad=0.15");
    add_threshold(cfg, "fidelity=0.98");
    CHECK(cmd_pipeline(cfg, scratch("pipe_full")).thresholds_met());
    cfg.measure_time_s /= 100.0;
    bool met = true;
    try {
      met = cmd_pipeline(cfg, scratch("pipe_low")).thresholds_met();
    } catch (const StageError&) {
      met = false;  // too few counts to reconstruct at all also counts as a miss
    }
    CHECK_FALSE(met);
  }
  SUBCASE("custom scenario with a user envelope") {
    const auto dir = scratch("custom");
    io::write_file(dir / "env.csv", io::format_envelope(fixture::rabi(1.0)));
    io::write_file(dir / "run.cfg", "scenario = custom\nenvelope_csv = env.csv\ndelta_rad_per_s = 1e8\n");
    const auto cfg = load_config(dir / "run.cfg");
    const auto r = cmd_pipeline(cfg, dir / "out");
    CHECK(r.report["reconstruct"]["rmse_vs_truth"].get<double>() < 0.15);
  }
  SUBCASE("unknown quantity for a command") {
    auto cfg = default_config();
    add_threshold(cfg, "cs=10");
    const auto dir = scratch("thr");
    cmd_simulate(cfg, dir);
    const auto in = load_inputs(dir, std::nullopt, std::nullopt);
    CHECK_THROWS_AS(cmd_reconstruct(in, cfg, dir / "r"), ConfigError);
  }
}

TEST_CASE("CLI exit codes") {
  const auto dir = scratch("cli");
  CHECK(run_cli("simulate --out " + dir.string()) == 0);
  CHECK(run_cli("reconstruct --in " + dir.string() + " --threshold phase_rmse_rad=0.5") == 0);
  CHECK(run_cli("reconstruct --in " + dir.string() + " --threshold phase_rmse_rad=1e-6") == 4);
  CHECK(run_cli("metrics --events " + (dir / "events.csv").string() + " --threshold cs=10") == 0);
  CHECK(run_cli("simulate --out " + dir.string() + " --threshold bogus=1") == 2);
  CHECK(run_cli("simulate --config /nonexistent.cfg --out " + dir.string()) == 2);
  CHECK(run_cli("frobnicate") == 2);

  io::write_file(dir / "bad.cfg", "eta = 3\n");
  CHECK(run_cli("simulate --config " + (dir / "bad.cfg").string() + " --out " + dir.string()) == 2);

  io::write_file(dir / "bad_events.csv", "channel,time_s\ns,0.1\nas,oops\n");
  CHECK(run_cli("metrics --events " + (dir / "bad_events.csv").string()) == 3);

  fs::remove(dir / "hist/T5.8ns_DL.csv");
  CHECK(run_cli("reconstruct --in " + dir.string()) == 3);

  const auto pipe = scratch("cli_pipe");
  CHECK(run_cli("pipeline --out " + pipe.string() + " --seed 3 --threshold gc=0.5") == 0);
  CHECK(fs::exists(pipe / "report.json"));
}
