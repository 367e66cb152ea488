#include "biphoton/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "biphoton/errors.hpp"
#include "biphoton/rng.hpp"

namespace biphoton::io {
namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw DataError(source + ":" + std::to_string(line) + ": " + msg);
}

double to_double(std::string_view s, const std::string& source, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    fail(source, line, "not a number: '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) fail(source, line, "non-finite value");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Walks lines, numbering from 1.
template <class F>
void for_lines(const std::string& text, F&& f) {
  std::size_t line = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    ++line;
    const auto len = (end == std::string::npos ? text.size() : end) - start;
    f(line, trim(std::string_view(text).substr(start, len)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

std::optional<std::string_view> comment_value(std::string_view l, std::string_view key) {
  if (l.empty() || l[0] != '#') return std::nullopt;
  const auto body = trim(l.substr(1));
  if (body.substr(0, key.size()) != key) return std::nullopt;
  const auto rest = trim(body.substr(key.size()));
  if (rest.empty() || rest[0] != '=') return std::nullopt;
  return trim(rest.substr(1));
}

}  // namespace

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const std::string& content) { return hex64(fnv1a(content)); }

TimeGrid grid_from_centers(const std::vector<double>& c, const std::string& source) {
  if (c.size() < 2) throw DataError(source + ": need at least two rows");
  const double bw = c[1] - c[0];
  if (!(bw > 0.0)) throw DataError(source + ": tau_ns must increase");
  for (std::size_t k = 1; k < c.size(); ++k) {
    if (std::abs(c[k] - c[0] - bw * static_cast<double>(k)) > 1e-6 * bw) {
      throw DataError(source + ":" + std::to_string(k + 2) + ": tau_ns is not uniformly spaced");
    }
  }
  return TimeGrid{c[0] - 0.5 * bw, bw, c.size()};
}

std::string format_envelope(const ComplexEnvelope& env) {
  std::string out = "tau_ns,re,im\n";
  for (std::size_t k = 0; k < env.grid().n_bins; ++k) {
    out += num(env.grid().center(k)) + "," + num(env[k].real()) + "," + num(env[k].imag()) + "\n";
  }
  return out;
}

ComplexEnvelope parse_envelope(const std::string& text, const std::string& source) {
  std::vector<double> tau;
  std::vector<Complex> z;
  bool header = false;
  for_lines(text, [&](std::size_t line, std::string_view l) {
    if (l.empty() || l[0] == '#') return;
    if (!header) {
      if (l != "tau_ns,re,im") fail(source, line, "expected header 'tau_ns,re,im'");
      header = true;
      return;
    }
    const auto f = split(l, ',');
    if (f.size() != 3) fail(source, line, "expected 3 columns, got " + std::to_string(f.size()));
    tau.push_back(to_double(f[0], source, line));
    z.emplace_back(to_double(f[1], source, line), to_double(f[2], source, line));
  });
  if (!header) throw DataError(source + ": missing header");
  const auto grid = grid_from_centers(tau, source);
  try {
    return ComplexEnvelope(grid, std::move(z));
  } catch (const std::invalid_argument& e) {
    throw DataError(source + ": " + e.what());
  }
}

std::string format_histogram(const CoincidenceHistogram& h) {
  auto setting = [](const std::optional<ProjectorSetting>& s) {
    return s ? std::string(to_string(s->label)) : std::string("none");
  };
  std::string out;
  out += "# T_ns=" + num(h.delay_ns) + "\n";
  out += "# setting3=" + setting(h.setting3) + "\n";
  out += "# setting4=" + setting(h.setting4) + "\n";
  out += "# kind=" + std::string(to_string(h.kind)) + "\n";
  out += "tau_ns,counts\n";
  for (std::size_t k = 0; k < h.grid.n_bins; ++k) {
    out += num(h.grid.center(k)) + "," + num(h.values[k]) + "\n";
  }
  return out;
}

CoincidenceHistogram parse_histogram(const std::string& text, const std::string& source) {
  std::optional<double> T;
  std::optional<std::string> s3, s4, kind;
  std::vector<double> tau, counts;
  bool header = false;
  for_lines(text, [&](std::size_t line, std::string_view l) {
    if (l.empty()) return;
    if (l[0] == '#') {
      if (auto v = comment_value(l, "T_ns")) T = to_double(*v, source, line);
      else if (auto v3 = comment_value(l, "setting3")) s3 = std::string(*v3);
      else if (auto v4 = comment_value(l, "setting4")) s4 = std::string(*v4);
      else if (auto vk = comment_value(l, "kind")) kind = std::string(*vk);
      return;
    }
    if (!header) {
      if (l != "tau_ns,counts") fail(source, line, "expected header 'tau_ns,counts'");
      header = true;
      return;
    }
    const auto f = split(l, ',');
    if (f.size() != 2) fail(source, line, "expected 2 columns, got " + std::to_string(f.size()));
    tau.push_back(to_double(f[0], source, line));
    const double c = to_double(f[1], source, line);
    if (c < 0.0) fail(source, line, "negative count");
    counts.push_back(c);
  });
  if (!header) throw DataError(source + ": missing header 'tau_ns,counts'");
  if (!T) throw DataError(source + ": missing '# T_ns=' line");
  if (!s3 || !s4) throw DataError(source + ": missing '# setting3=' or '# setting4=' line");

  CoincidenceHistogram h;
  h.grid = grid_from_centers(tau, source);
  h.delay_ns = *T;
  auto setting = [&](const std::string& s) -> std::optional<ProjectorSetting> {
    if (s == "none") return std::nullopt;
    const auto p = parse_polarization(s);
    if (!p) throw DataError(source + ": unknown setting '" + s + "'");
    return projector(*p);
  };
  h.setting3 = setting(*s3);
  h.setting4 = setting(*s4);
  if (h.setting3.has_value() != h.setting4.has_value()) {
    throw DataError(source + ": setting3 and setting4 must both be set or both be none");
  }
  if (!kind || *kind == "sampled") {
    h.kind = HistogramKind::Sampled;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] != std::floor(counts[k])) {
        throw DataError(source + ": sampled histogram has a non-integer count at tau_ns=" +
                        num(tau[k]));
      }
    }
  } else if (*kind == "expected") {
    h.kind = HistogramKind::Expected;
  } else {
    throw DataError(source + ": unknown kind '" + *kind + "'");
  }
  h.values = std::move(counts);
  return h;
}

std::string format_events(const EventStreams& ev) {
  std::string out = "# duration_s=" + num(ev.duration_s) + "\nchannel,time_s\n";
  char buf[48];
  for (double t : ev.stokes) {
    std::snprintf(buf, sizeof buf, "s,%.15g\n", t);
    out += buf;
  }
  for (double t : ev.antistokes) {
    std::snprintf(buf, sizeof buf, "as,%.15g\n", t);
    out += buf;
  }
  return out;
}

EventStreams parse_events(const std::string& text, const std::string& source) {
  EventStreams ev;
  std::optional<double> duration;
  bool header = false;
  for_lines(text, [&](std::size_t line, std::string_view l) {
    if (l.empty()) return;
    if (l[0] == '#') {
      if (auto v = comment_value(l, "duration_s")) {
        duration = to_double(*v, source, line);
        if (!(*duration > 0.0)) fail(source, line, "duration must be positive");
      }
      return;
    }
    if (!header) {
      if (l != "channel,time_s") fail(source, line, "expected header 'channel,time_s'");
      header = true;
      return;
    }
    const auto f = split(l, ',');
    if (f.size() != 2) fail(source, line, "expected 2 columns, got " + std::to_string(f.size()));
    const double t = to_double(f[1], source, line);
    if (t < 0.0) fail(source, line, "negative time");
    if (duration && t > *duration) fail(source, line, "time beyond duration");
    if (f[0] == "s") ev.stokes.push_back(t);
    else if (f[0] == "as") ev.antistokes.push_back(t);
    else fail(source, line, "unknown channel '" + std::string(f[0]) + "'");
  });
  if (!header) throw DataError(source + ": missing header 'channel,time_s'");
  std::sort(ev.stokes.begin(), ev.stokes.end());
  std::sort(ev.antistokes.begin(), ev.antistokes.end());
  if (duration) {
    ev.duration_s = *duration;
  } else {
    const double a = ev.stokes.empty() ? 0.0 : ev.stokes.back();
    const double b = ev.antistokes.empty() ? 0.0 : ev.antistokes.back();
    ev.duration_s = std::max(a, b);
    if (!(ev.duration_s > 0.0)) throw DataError(source + ": no events and no duration");
  }
  return ev;
}

std::string format_result(const ReconstructionResult& r) {
  std::string out = "tau_ns,amplitude,phase_rad,valid\n";
  for (std::size_t k = 0; k < r.grid.n_bins; ++k) {
    out += num(r.grid.center(k)) + "," + num(r.amplitude[k]) + "," +
           (r.valid[k] ? num(r.phase[k]) : std::string("nan")) + "," + (r.valid[k] ? "1" : "0") +
           "\n";
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
  if (!out) throw ConfigError("write failed: " + p.string());
}

}  // namespace biphoton::io
