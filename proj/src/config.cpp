#include "biphoton/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "biphoton/angles.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/io.hpp"

namespace biphoton {
namespace {

constexpr double kDefaultOmegaE = kTwoPi * 50e6;
constexpr double kNondegenerateDelta = kTwoPi * 43e6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_number(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::optional<double> parse_auto(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  return parse_number(key, v);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

Scenario parse_scenario(const std::string& v) {
  for (auto s : {Scenario::DegenerateRabi, Scenario::NondegenerateRabi, Scenario::Exponential,
                 Scenario::Custom}) {
    if (v == to_string(s)) return s;
  }
  throw ConfigError("scenario: unknown value '" + v +
                    "' (degenerate_rabi, nondegenerate_rabi, exponential, custom)");
}

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : "auto"; }

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    auto number = [&s](const char* key, double RunConfig::*field) {
      s[key] = [key, field](RunConfig& c, const std::string& v, const std::filesystem::path&) {
        c.*field = parse_number(key, v);
      };
    };
    number("rabi_omega_e", &RunConfig::rabi_omega_e);
    number("rabi_gamma", &RunConfig::rabi_gamma);
    number("rabi_phi0", &RunConfig::rabi_phi0);
    number("exp_gamma", &RunConfig::exp_gamma);
    number("grid_tau_min_ns", &RunConfig::grid_tau_min_ns);
    number("grid_tau_max_ns", &RunConfig::grid_tau_max_ns);
    number("bin_width_ns", &RunConfig::bin_width_ns);
    number("omega_s0", &RunConfig::omega_s0);
    number("delta_rad_per_s", &RunConfig::delta_rad_per_s);
    number("pair_rate_per_s", &RunConfig::pair_rate_per_s);
    number("eta", &RunConfig::eta);
    number("measure_time_s", &RunConfig::measure_time_s);
    number("background_per_bin", &RunConfig::background_per_bin);
    number("lambda0_rad", &RunConfig::lambda0_rad);
    number("singles_background_s_per_s", &RunConfig::singles_background_s_per_s);
    number("singles_background_as_per_s", &RunConfig::singles_background_as_per_s);
    number("stream_duration_s", &RunConfig::stream_duration_s);
    number("g2_window_ns", &RunConfig::g2_window_ns);

    s["scenario"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.scenario = parse_scenario(v);
    };
    s["envelope_csv"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
      const std::filesystem::path p(v);
      c.envelope_csv = p.is_absolute() || base.empty() ? p : base / p;
    };
    s["noise_free"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.noise_free = parse_bool("noise_free", v);
    };
    s["seed"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      std::uint64_t x = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
        throw ConfigError("seed: expected a non-negative integer, got '" + v + "'");
      }
      c.seed = x;
    };
    s["heralding_window_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.heralding_window_ns = parse_auto("heralding_window_ns", v);
    };
    s["gcross_tau_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.gcross_tau_ns = parse_auto("gcross_tau_ns", v);
    };
    s["T_s_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.T_s_ns = parse_number("T_s_ns", v);
    };
    s["T_l_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.T_l_ns = parse_number("T_l_ns", v);
    };
    s["island_threshold"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.island_threshold = parse_number("island_threshold", v);
    };
    s["count_floor"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.count_floor = parse_number("count_floor", v);
    };
    s["reference_tau0_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.reference_tau0_ns = parse_auto("reference_tau0_ns", v);
    };
    s["t_a_ns"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.t_a_ns = parse_auto("t_a_ns", v);
    };
    s["background_subtract"] = [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
      c.plan.background = parse_auto("background_subtract", v);
    };
    return s;
  }();
  return m;
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::DegenerateRabi: return "degenerate_rabi";
    case Scenario::NondegenerateRabi: return "nondegenerate_rabi";
    case Scenario::Exponential: return "exponential";
    case Scenario::Custom: return "custom";
  }
  return "?";
}

Bound threshold_bound(const std::string& key) {
  static const std::map<std::string, Bound> known = {
      {"phase_rmse_rad", Bound::Max},  {"fidelity", Bound::Min},
      {"delta_rel_error", Bound::Max}, {"delta_abs_error_rad_per_s", Bound::Max},
      {"lambda0_error_rad", Bound::Max}, {"cs", Bound::Min},
      {"gc", Bound::Max},
  };
  const auto it = known.find(key);
  if (it == known.end()) {
    std::string names;
    for (const auto& [k, b] : known) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("threshold." + key + ": unknown threshold (known: " + names + ")");
  }
  return it->second;
}

void add_threshold(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("threshold '" + assignment + "': expected key=value");
  }
  std::string key = trim(assignment.substr(0, eq));
  if (key.rfind("threshold.", 0) == 0) key = key.substr(10);
  const double limit = parse_number("threshold." + key, trim(assignment.substr(eq + 1)));
  const Bound b = threshold_bound(key);
  for (auto& t : cfg.thresholds) {
    if (t.key == key) {
      t.limit = limit;
      return;
    }
  }
  cfg.thresholds.push_back({key, limit, b});
}

RunConfig default_config(Scenario s) {
  RunConfig c;
  c.scenario = s;
  c.rabi_omega_e = kDefaultOmegaE;
  c.delta_rad_per_s = s == Scenario::DegenerateRabi ? 0.0 : kNondegenerateDelta;
  return c;
}

TimeGrid RunConfig::grid() const {
  try {
    return make_time_grid(grid_tau_min_ns, grid_tau_max_ns, bin_width_ns);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

SourceSpec RunConfig::source() const {
  return SourceSpec{omega_s0, omega_s0 + delta_rad_per_s, delta_rad_per_s, pair_rate_per_s};
}

AcquisitionConfig RunConfig::acquisition() const {
  return AcquisitionConfig{eta, bin_width_ns * kSecondsPerNs, measure_time_s,
                           background_per_bin, seed};
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (scenario == Scenario::Custom) {
    require(!envelope_csv.empty(), "envelope_csv: required for the custom scenario");
    require(std::filesystem::exists(envelope_csv),
            "envelope_csv: file not found: " + envelope_csv.string());
    for (const char* k : {"grid_tau_min_ns", "grid_tau_max_ns", "bin_width_ns"}) {
      require(!explicit_keys.contains(k),
              std::string(k) + ": the custom scenario takes its grid from envelope_csv");
    }
  } else {
    require(envelope_csv.empty(), "envelope_csv: only used by the custom scenario");
    (void)grid();
    require(grid().symmetric(), "grid: tau range must be symmetric about 0");
  }
  if (scenario == Scenario::DegenerateRabi || scenario == Scenario::NondegenerateRabi) {
    require(rabi_omega_e > 0.0, "rabi_omega_e: must be positive");
    require(rabi_gamma > 0.0, "rabi_gamma: must be positive");
  }
  if (scenario == Scenario::Exponential) require(exp_gamma > 0.0, "exp_gamma: must be positive");
  require(pair_rate_per_s > 0.0, "pair_rate_per_s: must be positive");
  require(eta > 0.0 && eta <= 1.0, "eta: must lie in (0, 1]");
  require(measure_time_s > 0.0, "measure_time_s: must be positive");
  require(background_per_bin >= 0.0, "background_per_bin: must be >= 0");
  require(singles_background_s_per_s >= 0.0, "singles_background_s_per_s: must be >= 0");
  require(singles_background_as_per_s >= 0.0, "singles_background_as_per_s: must be >= 0");
  require(stream_duration_s > 0.0, "stream_duration_s: must be positive");
  require(g2_window_ns > 0.0, "g2_window_ns: must be positive");
  require(!heralding_window_ns || *heralding_window_ns > 0.0,
          "heralding_window_ns: must be positive");
  if (scenario != Scenario::Custom) {
    try {
      plan.validate(bin_width_ns);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("plan: ") + e.what());
    }
  }
}

std::string RunConfig::dump() const {
  std::ostringstream os;
  os << "scenario = " << to_string(scenario) << "\n"
     << "rabi_omega_e = " << num(rabi_omega_e) << "\n"
     << "rabi_gamma = " << num(rabi_gamma) << "\n"
     << "rabi_phi0 = " << num(rabi_phi0) << "\n"
     << "exp_gamma = " << num(exp_gamma) << "\n";
  if (!envelope_csv.empty()) os << "envelope_csv = " << envelope_csv.string() << "\n";
  os << "grid_tau_min_ns = " << num(grid_tau_min_ns) << "\n"
     << "grid_tau_max_ns = " << num(grid_tau_max_ns) << "\n"
     << "bin_width_ns = " << num(bin_width_ns) << "\n"
     << "omega_s0 = " << num(omega_s0) << "\n"
     << "delta_rad_per_s = " << num(delta_rad_per_s) << "\n"
     << "pair_rate_per_s = " << num(pair_rate_per_s) << "\n"
     << "eta = " << num(eta) << "\n"
     << "measure_time_s = " << num(measure_time_s) << "\n"
     << "background_per_bin = " << num(background_per_bin) << "\n"
     << "lambda0_rad = " << num(lambda0_rad) << "\n"
     << "noise_free = " << (noise_free ? "true" : "false") << "\n"
     << "T_s_ns = " << num(plan.T_s_ns) << "\n"
     << "T_l_ns = " << num(plan.T_l_ns) << "\n"
     << "island_threshold = " << num(plan.island_threshold) << "\n"
     << "count_floor = " << num(plan.count_floor) << "\n"
     << "reference_tau0_ns = " << opt(plan.reference_tau0_ns) << "\n"
     << "t_a_ns = " << opt(plan.t_a_ns) << "\n"
     << "background_subtract = " << opt(plan.background) << "\n"
     << "singles_background_s_per_s = " << num(singles_background_s_per_s) << "\n"
     << "singles_background_as_per_s = " << num(singles_background_as_per_s) << "\n"
     << "stream_duration_s = " << num(stream_duration_s) << "\n"
     << "heralding_window_ns = " << opt(heralding_window_ns) << "\n"
     << "g2_window_ns = " << num(g2_window_ns) << "\n"
     << "gcross_tau_ns = " << opt(gcross_tau_ns) << "\n"
     << "seed = " << seed << "\n";
  for (const auto& t : thresholds) os << "threshold." << t.key << " = " << num(t.limit) << "\n";
  return os.str();
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::string& source) {
  // The scenario sets defaults for other keys, so it is applied first.
  std::vector<std::pair<std::size_t, std::pair<std::string, std::string>>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  std::set<std::string> seen;
  std::optional<Scenario> scenario;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    auto where = [&] { return source + ":" + std::to_string(n) + ": "; };
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    if (!seen.insert(key).second) throw ConfigError(where() + "duplicate key '" + key + "'");
    if (key == "scenario") {
      try {
        scenario = parse_scenario(value);
      } catch (const ConfigError& e) {
        throw ConfigError(where() + e.what());
      }
      continue;
    }
    if (key.rfind("threshold.", 0) != 0 && !setters().contains(key)) {
      throw ConfigError(where() + "unknown key '" + key + "'");
    }
    entries.push_back({n, {key, value}});
  }

  RunConfig cfg = default_config(scenario.value_or(Scenario::DegenerateRabi));
  cfg.explicit_keys = seen;
  for (const auto& [ln, kv] : entries) {
    const auto& [key, value] = kv;
    try {
      if (key.rfind("threshold.", 0) == 0) {
        add_threshold(cfg, key + "=" + value);
      } else {
        setters().at(key)(cfg, value, base_dir);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text, path.parent_path(), path.string());
}

}  // namespace biphoton
