#include "biphoton/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "biphoton/angles.hpp"
#include "biphoton/errors.hpp"

namespace biphoton {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Poisson variance with a one-count floor so empty bins do not look exact.
// Variance of an angle uniform on the circle.
constexpr double kUniformAngleVar = kPi * kPi / 3.0;

double count_var(double n) { return std::max(n, 1.0); }

// Var of (a - b) / (a + b) for independent Poisson a, b.
double contrast_var(double a, double b) {
  const double va = count_var(a), vb = count_var(b);
  const double s = std::max(a + b, 1.0);
  return 4.0 * (b * b * va + a * a * vb) / (s * s * s * s);
}

// Bins strictly outside the mixed-term region |tau| <= shift * bin width.
bool beyond_mixed_region(const TimeGrid& g, std::size_t k, std::size_t shift) {
  return std::abs(g.center(k)) > static_cast<double>(shift) * g.bin_width_ns + 1e-9 * g.bin_width_ns;
}

SixPack subtract_background(const SixPack& pack, double background) {
  if (background <= 0.0) return pack;
  SixPack out = pack;
  for (auto& h : out.rows) {
    for (double& v : h.values) v = std::max(v - background, 0.0);
  }
  return out;
}

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

RatioProfile compute_B(const SixPack& pack, double count_floor) {
  const auto& vh = pack[SixRow::VH].values;
  const auto& hv = pack[SixRow::HV].values;
  RatioProfile out{std::vector<double>(vh.size(), kNaN), std::vector<bool>(vh.size(), false)};
  for (std::size_t k = 0; k < vh.size(); ++k) {
    if (vh[k] > count_floor && hv[k] > count_floor) {
      out.ratio[k] = vh[k] / hv[k];
      out.valid[k] = true;
    }
  }
  return out;
}

LambdaProfile compute_lambda(const SixPack& pack, double count_floor) {
  pack.validate();
  const auto& grid = pack.grid();
  const std::size_t n = grid.n_bins;
  const auto B = compute_B(pack, 0.0);
  const auto& dd = pack[SixRow::DD].values;
  const auto& da = pack[SixRow::DA].values;
  const auto& dr = pack[SixRow::DR].values;
  const auto& dl = pack[SixRow::DL].values;
  const auto& vh = pack[SixRow::VH].values;
  const auto& hv = pack[SixRow::HV].values;

  LambdaProfile out{grid,
                    pack.delay_ns(),
                    std::vector<double>(n, kNaN),
                    std::vector<double>(n, kNaN),
                    std::vector<double>(n, 0.0),
                    std::vector<bool>(n, false),
                    std::vector<double>(n, kNaN),
                    std::vector<double>(n, kNaN)};
  std::size_t n_valid = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!B.valid[k]) continue;
    const double sum = vh[k] + hv[k] + dd[k] + da[k] + dr[k] + dl[k];
    if (sum < count_floor || dd[k] + da[k] <= 0.0 || dr[k] + dl[k] <= 0.0) continue;

    const double b = B.ratio[k];
    const double f = (b + 1.0) / (2.0 * std::sqrt(b));
    const double r_lin = (dd[k] - da[k]) / (dd[k] + da[k]);
    const double r_circ = (dr[k] - dl[k]) / (dr[k] + dl[k]);
    const double c = -f * r_lin;
    const double s = f * r_circ;
    out.cos_raw[k] = c;
    out.sin_raw[k] = s;
    out.lambda[k] = std::atan2(std::clamp(s, -1.0, 1.0), std::clamp(c, -1.0, 1.0));

    // Delta-method error: B is shared by c and s.
    const double var_b = b * b * (1.0 / count_var(vh[k]) + 1.0 / count_var(hv[k]));
    const double df = (b - 1.0) / (4.0 * b * std::sqrt(b));
    const double var_c = f * f * contrast_var(dd[k], da[k]) + r_lin * r_lin * df * df * var_b;
    const double var_s = f * f * contrast_var(dr[k], dl[k]) + r_circ * r_circ * df * df * var_b;
    const double cov_cs = -r_lin * r_circ * df * df * var_b;
    // Inside the noise radius the angle is no better than uniform, and the
    // delta method would report a near-zero variance at c = s = 0.
    const double rho2 = c * c + s * s;
    double var = kUniformAngleVar;
    if (rho2 > var_c + var_s) {
      var = std::min((s * s * var_c + c * c * var_s - 2.0 * s * c * cov_cs) / (rho2 * rho2),
                     kUniformAngleVar);
    }
    out.sigma[k] = std::sqrt(var);
    out.weight[k] = 1.0 / var;
    out.valid[k] = true;
    ++n_valid;
  }
  if (n_valid == 0) {
    throw std::runtime_error("compute_lambda: every bin fails the count floor");
  }
  return out;
}

Lambda0Estimate estimate_lambda0(const LambdaProfile& p, std::optional<double> t_a_ns,
                                 std::optional<double> branch_hint) {
  const auto& g = p.grid;
  const std::size_t shift = lattice_shift(p.delay_ns, g.bin_width_ns);

  struct Pair {
    std::size_t pos, neg;
    double u;
  };
  std::vector<Pair> pairs;
  for (std::size_t k = 0; k < g.n_bins; ++k) {
    if (g.center(k) <= 0.0 || !beyond_mixed_region(g, k, shift)) continue;
    const auto m = g.mirror_of(k);
    if (!m || !p.valid[k] || !p.valid[*m]) continue;
    pairs.push_back({k, *m, g.center(k)});
  }
  double t_a = 0.0;
  for (const auto& pr : pairs) t_a = std::max(t_a, pr.u);
  if (t_a_ns) t_a = *t_a_ns;

  std::vector<double> sums, weights;
  std::complex<double> resultant{};
  for (const auto& pr : pairs) {
    if (pr.u > t_a + 1e-9) continue;
    const double a = kInterferenceSign * p.lambda[pr.pos];
    const double b = kInterferenceSign * p.lambda[pr.neg];
    const double var = p.sigma[pr.pos] * p.sigma[pr.pos] + p.sigma[pr.neg] * p.sigma[pr.neg];
    sums.push_back(a + b);
    weights.push_back(1.0 / var);
    resultant += p.weight[pr.pos] * std::polar(1.0, a) + p.weight[pr.neg] * std::polar(1.0, b);
  }
  const auto mean2 = circular_mean(sums, weights);
  if (!mean2) {
    throw std::runtime_error("estimate_lambda0: no valid symmetric bin pairs within t_a");
  }

  // Pair sums give 2 Lambda0; both halves of the doubled angle are candidates.
  const double c0 = wrap_angle(0.5 * mean2->mean);
  const double c1 = wrap_angle(c0 + kPi);
  double chosen;
  if (branch_hint) {
    chosen = std::abs(wrap_angle(c0 - *branch_hint)) <= std::abs(wrap_angle(c1 - *branch_hint)) ? c0 : c1;
  } else {
    chosen = std::real(resultant * std::polar(1.0, -c0)) >= 0.0 ? c0 : c1;
  }
  return Lambda0Estimate{chosen, 0.5 / std::sqrt(mean2->weight_sum), sums.size(), t_a};
}

XiProfile compute_xi(const LambdaProfile& p, double lambda0) {
  const auto& g = p.grid;
  const std::size_t shift = lattice_shift(p.delay_ns, g.bin_width_ns);
  const std::size_t n = g.n_bins;
  XiProfile out{g, p.delay_ns, std::vector<double>(n, kNaN), p.sigma, std::vector<double>(n, 0.0),
                std::vector<bool>(n, false)};
  for (std::size_t k = 0; k < n; ++k) {
    if (!p.valid[k] || !beyond_mixed_region(g, k, shift)) continue;
    out.xi[k] = wrap_angle(kInterferenceSign * p.lambda[k] - lambda0);
    out.weight[k] = p.weight[k];
    out.valid[k] = true;
  }
  return out;
}

XiProfile fold_wings(const XiProfile& xi) {
  const auto& g = xi.grid;
  const std::size_t n = g.n_bins;
  XiProfile out{g, xi.delay_ns, std::vector<double>(n, kNaN), std::vector<double>(n, kNaN),
                std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  for (std::size_t k = 0; k < n; ++k) {
    if (g.center(k) <= 0.0) continue;
    const auto m = g.mirror_of(k);
    const bool has_pos = xi.valid[k];
    const bool has_neg = m && xi.valid[*m];
    if (!has_pos && !has_neg) continue;
    std::complex<double> acc{};
    double w = 0.0;
    if (has_pos) {
      acc += xi.weight[k] * std::polar(1.0, xi.xi[k]);
      w += xi.weight[k];
    }
    if (has_neg) {
      acc += xi.weight[*m] * std::polar(1.0, -xi.xi[*m]);
      w += xi.weight[*m];
    }
    out.xi[k] = std::arg(acc);
    out.weight[k] = w;
    out.sigma[k] = 1.0 / std::sqrt(w);
    out.valid[k] = true;
  }
  return out;
}

std::size_t default_delta_window(const XiProfile& xi) {
  return std::max<std::size_t>(lattice_shift(xi.delay_ns, xi.grid.bin_width_ns), 4);
}

DeltaEstimate estimate_delta(const XiProfile& xi, std::optional<std::size_t> window_bins) {
  const auto& g = xi.grid;
  const std::size_t shift = lattice_shift(xi.delay_ns, g.bin_width_ns);
  const std::size_t window = window_bins.value_or(default_delta_window(xi));
  const double hi = static_cast<double>(shift + window) * g.bin_width_ns;

  std::vector<double> pos, neg;
  for (std::size_t k = 0; k < g.n_bins; ++k) {
    if (!xi.valid[k] || !beyond_mixed_region(g, k, shift)) continue;
    const double u = std::abs(g.center(k));
    if (u > hi + 1e-9 * g.bin_width_ns) continue;
    (g.center(k) > 0.0 ? pos : neg).push_back(xi.xi[k]);
  }
  if (pos.empty() || neg.empty()) {
    throw std::runtime_error("estimate_delta: an edge window next to |tau| <= T has no valid bins");
  }
  const double jump = wrap_angle(*circular_median(neg) - *circular_median(pos));
  return DeltaEstimate{jump / (2.0 * xi.delay_ns * kSecondsPerNs), jump, window};
}

double resolve_jump_branch(double jump_long, double delay_long_ns, double delta_short) {
  const double predicted = 2.0 * delta_short * delay_long_ns * kSecondsPerNs;
  const double k = std::round((predicted - jump_long) / kTwoPi);
  return jump_long + kTwoPi * k;
}

std::vector<BinInterval> detect_islands(const TimeGrid& grid, std::span<const double> density,
                                        double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("detect_islands: threshold must lie in (0, 1)");
  }
  if (density.size() != grid.n_bins) throw std::invalid_argument("detect_islands: length mismatch");
  double peak = 0.0;
  for (std::size_t k = 0; k < grid.n_bins; ++k) {
    if (grid.center(k) > 0.0) peak = std::max(peak, density[k]);
  }
  if (!(peak > 0.0)) throw std::runtime_error("detect_islands: no signal at tau > 0");

  std::vector<BinInterval> out;
  std::optional<std::size_t> start;
  for (std::size_t k = 0; k <= grid.n_bins; ++k) {
    const bool in = k < grid.n_bins && grid.center(k) > 0.0 && density[k] >= threshold * peak;
    if (in && !start) start = k;
    if (!in && start) {
      out.push_back({*start, k - 1});
      start.reset();
    }
  }
  if (out.empty()) throw std::runtime_error("detect_islands: no island found");
  return out;
}

std::optional<double> LatticePhase::at(std::size_t bin) const {
  const auto it = std::lower_bound(bins.begin(), bins.end(), bin);
  if (it == bins.end() || *it != bin) return std::nullopt;
  return phase[static_cast<std::size_t>(it - bins.begin())];
}

LatticePhase recursive_phase(const XiProfile& xi, double tau0_ns, double delta,
                             const BinInterval& island) {
  const auto& g = xi.grid;
  const std::size_t shift = lattice_shift(xi.delay_ns, g.bin_width_ns);
  if (shift == 0) throw std::invalid_argument("recursive_phase: delay rounds to zero bins");
  const auto ref = g.bin_of(tau0_ns);
  if (!ref || !island.contains(*ref)) {
    throw std::invalid_argument("recursive_phase: reference tau0 lies outside the island");
  }
  const double step_phase = delta * xi.delay_ns * kSecondsPerNs;
  const std::size_t step = 2 * shift;

  LatticePhase out;
  out.reference_bin = *ref;
  out.step_bins = step;

  std::vector<std::pair<std::size_t, double>> pts{{*ref, 0.0}};
  // Forward: phi(x + 2T) = phi(x) + Xi(x + T) + delta T.
  double phi = 0.0;
  for (std::size_t x = *ref; x + step <= island.last; x += step) {
    const std::size_t mid = x + shift;
    if (!xi.valid[mid]) {
      out.truncated = true;
      break;
    }
    phi += xi.xi[mid] + step_phase;
    pts.emplace_back(x + step, phi);
  }
  // Backward: phi(x - 2T) = phi(x) - Xi(x - T) - delta T.
  phi = 0.0;
  for (std::size_t x = *ref; x >= island.first + step; x -= step) {
    const std::size_t mid = x - shift;
    if (!xi.valid[mid]) {
      out.truncated = true;
      break;
    }
    phi -= xi.xi[mid] + step_phase;
    pts.emplace_back(x - step, phi);
  }
  std::sort(pts.begin(), pts.end());
  for (const auto& [b, v] : pts) {
    out.bins.push_back(b);
    out.phase.push_back(v);
  }
  return out;
}

StitchedPhase stitch_two_step(const std::vector<LatticePhase>& fine, const XiProfile& coarse_xi,
                              const std::vector<BinInterval>& islands, double delta,
                              std::size_t n_bins) {
  if (fine.size() != islands.size()) {
    throw std::invalid_argument("stitch_two_step: one fine solution per island required");
  }
  const auto& g = coarse_xi.grid;
  const std::size_t shift = lattice_shift(coarse_xi.delay_ns, g.bin_width_ns);
  const double step_phase = delta * coarse_xi.delay_ns * kSecondsPerNs;

  StitchedPhase out;
  out.phase.assign(n_bins, kNaN);
  out.valid.assign(n_bins, false);
  out.component.assign(islands.size(), 0);
  out.island_offset.assign(islands.size(), 0.0);
  out.bridge_pairs.assign(islands.empty() ? 0 : islands.size() - 1, 0);

  for (std::size_t i = 0; i + 1 < islands.size(); ++i) {
    std::vector<double> diffs, weights;
    for (std::size_t j = 0; j < fine[i].bins.size(); ++j) {
      const std::size_t x = fine[i].bins[j];
      const std::size_t y = x + 2 * shift;
      const std::size_t mid = x + shift;
      if (y >= n_bins || !islands[i + 1].contains(y) || !coarse_xi.valid[mid]) continue;
      const auto fy = fine[i + 1].at(y);
      if (!fy) continue;
      diffs.push_back(fine[i].phase[j] + coarse_xi.xi[mid] + step_phase - *fy);
      weights.push_back(coarse_xi.weight[mid]);
    }
    out.bridge_pairs[i] = diffs.size();
    const auto m = circular_mean(diffs, weights);
    if (m) {
      out.component[i + 1] = out.component[i];
      out.island_offset[i + 1] = out.island_offset[i] + m->mean;
    } else {
      out.component[i + 1] = out.component[i] + 1;
      out.island_offset[i + 1] = 0.0;
    }
  }

  for (std::size_t i = 0; i < islands.size(); ++i) {
    for (std::size_t j = 0; j < fine[i].bins.size(); ++j) {
      const std::size_t b = fine[i].bins[j];
      out.phase[b] = fine[i].phase[j] + out.island_offset[i];
      out.valid[b] = true;
    }
  }
  return out;
}

std::vector<double> reconstruct_amplitude(const CoincidenceHistogram& c12, double background) {
  const auto& g = c12.grid;
  std::vector<double> amp(g.n_bins, 0.0);
  double norm = 0.0;
  for (std::size_t k = 0; k < g.n_bins; ++k) {
    if (g.center(k) <= 0.0) continue;
    amp[k] = std::sqrt(std::max(c12.values[k] - background, 0.0));
    norm += amp[k] * amp[k];
  }
  norm *= g.bin_width_ns;
  if (!(norm > 0.0)) {
    throw std::runtime_error("reconstruct_amplitude: every bin is at or below background");
  }
  const double s = 1.0 / std::sqrt(norm);
  for (double& a : amp) a *= s;
  return amp;
}

double estimate_background(const CoincidenceHistogram& c12) {
  const std::size_t n = c12.values.size();
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  std::vector<double> tail;
  for (std::size_t k = 0; k < edge && k < n; ++k) {
    tail.push_back(c12.values[k]);
    tail.push_back(c12.values[n - 1 - k]);
  }
  std::sort(tail.begin(), tail.end());
  const std::size_t m = tail.size();
  return (m % 2 == 1) ? tail[m / 2] : 0.5 * (tail[m / 2 - 1] + tail[m / 2]);
}

void TomographyPlan::validate(double bin_width_ns) const {
  if (!(T_s_ns > 0.0) || !(T_l_ns > T_s_ns)) {
    throw std::invalid_argument("plan: need 0 < T_s < T_l");
  }
  const auto ls = lattice_shift(T_s_ns, bin_width_ns);
  const auto ll = lattice_shift(T_l_ns, bin_width_ns);
  if (ls == 0) throw std::invalid_argument("plan: T_s is shorter than half a bin");
  if (ll <= ls) throw std::invalid_argument("plan: T_l must span more bins than T_s");
  if (!(island_threshold > 0.0 && island_threshold < 1.0)) {
    throw std::invalid_argument("plan: island_threshold must lie in (0, 1)");
  }
  if (!(count_floor >= 0.0)) throw std::invalid_argument("plan: count_floor must be >= 0");
  if (background && !(*background >= 0.0)) throw std::invalid_argument("plan: background must be >= 0");
}

ReconstructionResult reconstruct(const SixPack& short_pack, const SixPack& long_pack,
                                 const CoincidenceHistogram& c12, const TomographyPlan& plan) {
  run_stage("input", [&] {
    short_pack.validate();
    long_pack.validate();
    if (!same_lattice(short_pack.grid(), long_pack.grid()) ||
        !same_lattice(short_pack.grid(), c12.grid)) {
      throw DataError("six-packs and C12 must share one grid");
    }
    if (!c12.grid.symmetric()) throw DataError("C12 grid must be symmetric about tau = 0");
    if (std::abs(short_pack.delay_ns() - plan.T_s_ns) > 1e-6 ||
        std::abs(long_pack.delay_ns() - plan.T_l_ns) > 1e-6) {
      throw DataError("six-pack delays do not match the plan's T_s / T_l");
    }
    plan.validate(c12.grid.bin_width_ns);
    return 0;
  });
  const TimeGrid grid = c12.grid;
  const std::size_t n = grid.n_bins;

  const double background =
      run_stage("background", [&] { return plan.background ? *plan.background : estimate_background(c12); });
  const SixPack ps = subtract_background(short_pack, background);
  const SixPack pl = subtract_background(long_pack, background);

  const auto lam_s = run_stage("compute_lambda(T_s)", [&] { return compute_lambda(ps, plan.count_floor); });
  const auto lam_l = run_stage("compute_lambda(T_l)", [&] { return compute_lambda(pl, plan.count_floor); });

  const auto l0_s = run_stage("estimate_lambda0(T_s)", [&] { return estimate_lambda0(lam_s, plan.t_a_ns); });
  const auto l0_l = run_stage("estimate_lambda0(T_l)",
                              [&] { return estimate_lambda0(lam_l, plan.t_a_ns, l0_s.value); });

  const auto xi_s = compute_xi(lam_s, l0_s.value);
  const auto xi_l = compute_xi(lam_l, l0_l.value);

  const auto d_s = run_stage("estimate_delta(T_s)", [&] { return estimate_delta(xi_s); });
  const auto d_l = run_stage("estimate_delta(T_l)", [&] { return estimate_delta(xi_l); });
  const double jump_long = resolve_jump_branch(d_l.jump, plan.T_l_ns, d_s.delta);
  const double delta_hat = jump_long / (2.0 * plan.T_l_ns * kSecondsPerNs);

  const auto amplitude = run_stage("reconstruct_amplitude", [&] { return reconstruct_amplitude(c12, background); });
  std::vector<double> density(n);
  for (std::size_t k = 0; k < n; ++k) density[k] = amplitude[k] * amplitude[k];
  const auto islands =
      run_stage("detect_islands", [&] { return detect_islands(grid, density, plan.island_threshold); });

  const std::size_t ref_bin = run_stage("reference", [&] {
    if (plan.reference_tau0_ns) {
      const auto b = grid.bin_of(*plan.reference_tau0_ns);
      if (!b) throw std::invalid_argument("reference tau0 lies outside the grid");
      return *b;
    }
    std::size_t best = 0;
    double peak = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (grid.center(k) > 0.0 && density[k] > peak) {
        peak = density[k];
        best = k;
      }
    }
    return best;
  });
  const auto ref_it = std::find_if(islands.begin(), islands.end(),
                                   [&](const BinInterval& I) { return I.contains(ref_bin); });
  if (ref_it == islands.end()) {
    throw StageError("reference", "reference tau0 does not lie inside an amplitude island");
  }
  const std::size_t ref_island = static_cast<std::size_t>(ref_it - islands.begin());

  const auto fold_s = fold_wings(xi_s);
  const auto fold_l = fold_wings(xi_l);

  // Every island's fine lattice must contain x + 2T_l for lattice points x of
  // its left neighbour, so residues modulo 2 T_s are propagated from tau0.
  const std::size_t ls = lattice_shift(plan.T_s_ns, grid.bin_width_ns);
  const std::size_t ll = lattice_shift(plan.T_l_ns, grid.bin_width_ns);
  const std::size_t mod = 2 * ls;
  const std::size_t hop = (2 * ll) % mod;
  std::vector<std::size_t> residue(islands.size());
  residue[ref_island] = ref_bin % mod;
  for (std::size_t i = ref_island + 1; i < islands.size(); ++i) residue[i] = (residue[i - 1] + hop) % mod;
  for (std::size_t i = ref_island; i-- > 0;) residue[i] = (residue[i + 1] + mod - hop) % mod;

  std::vector<LatticePhase> fine;
  std::vector<BinInterval> kept;
  std::vector<bool> truncated;
  run_stage("recursive_phase", [&] {
    for (std::size_t i = 0; i < islands.size(); ++i) {
      std::optional<std::size_t> start;
      if (i == ref_island) {
        start = ref_bin;
      } else {
        double best = -1.0;
        for (std::size_t k = islands[i].first; k <= islands[i].last; ++k) {
          if (k % mod == residue[i] && density[k] > best) {
            best = density[k];
            start = k;
          }
        }
      }
      if (!start) continue;
      fine.push_back(recursive_phase(fold_s, grid.center(*start), delta_hat, islands[i]));
      kept.push_back(islands[i]);
      truncated.push_back(fine.back().truncated);
    }
    return 0;
  });

  auto stitched = run_stage("stitch_two_step",
                            [&] { return stitch_two_step(fine, fold_l, kept, delta_hat, n); });

  // Re-reference the component holding tau0 so that phi(tau0) = 0.
  const auto kept_ref = static_cast<std::size_t>(
      std::find(kept.begin(), kept.end(), islands[ref_island]) - kept.begin());
  const int ref_component = stitched.component[kept_ref];
  const double ref_phase = stitched.phase[ref_bin];
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (stitched.component[i] != ref_component) continue;
    for (std::size_t b : fine[i].bins) stitched.phase[b] -= ref_phase;
  }

  ReconstructionResult r;
  r.grid = grid;
  r.amplitude = amplitude;
  r.phase = stitched.phase;
  r.valid = stitched.valid;
  for (std::size_t k = 0; k < n; ++k) {
    if (r.valid[k] && !(amplitude[k] > 0.0)) r.valid[k] = false;
    if (!r.valid[k]) r.phase[k] = kNaN;
  }
  r.delta_hat = delta_hat;
  r.lambda0_hat = l0_s.value;
  r.lambda0_stderr = l0_s.std_error;
  r.islands = kept;
  r.components = stitched.component;
  r.reference_bin = ref_bin;
  r.delta_short = d_s.delta;
  r.jump_long = jump_long;
  r.lambda0_long = l0_l.value;
  r.xi_long = xi_l;
  r.xi_short = xi_s;
  r.truncated = truncated;
  return r;
}

}  // namespace biphoton
