#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "biphoton/interferometer.hpp"
#include "biphoton/waveform.hpp"

namespace biphoton {

// The count ratios of the six projections give atan2(s, c) = arg(X Y*), where
// X and Y are the two brackets of the post-beam-splitter amplitude. With the
// beam-splitter convention a3 = (a1 + i a2)/sqrt2 that angle is
// -(Xi + Lambda0), so the measured angle enters every Xi / Lambda0 relation
// through this sign.
inline constexpr double kInterferenceSign = -1.0;

// Lambda(T, tau) as given by the ratio formulas, per bin.
struct LambdaProfile {
  TimeGrid grid;
  double delay_ns = 0.0;
  std::vector<double> lambda;  // (-pi, pi]
  std::vector<double> sigma;   // propagated standard error, rad
  std::vector<double> weight;  // 1 / sigma^2
  std::vector<bool> valid;
  // c and s before clamping; c^2 + s^2 = 1 without noise.
  std::vector<double> cos_raw;
  std::vector<double> sin_raw;
};

// Xi(T, tau), the combined phase difference, per bin.
struct XiProfile {
  TimeGrid grid;
  double delay_ns = 0.0;
  std::vector<double> xi;
  std::vector<double> sigma;
  std::vector<double> weight;
  std::vector<bool> valid;
};

struct RatioProfile {
  std::vector<double> ratio;
  std::vector<bool> valid;
};

// B = C_VH / C_HV where both exceed `count_floor`.
RatioProfile compute_B(const SixPack& pack, double count_floor = 0.0);

// Per-bin Lambda from the six projections. A bin is valid when B is valid and
// the summed six-pack counts reach `count_floor`. Throws when no bin is valid.
LambdaProfile compute_lambda(const SixPack& pack, double count_floor = 20.0);

struct Lambda0Estimate {
  double value = 0.0;   // (-pi, pi]
  double std_error = 0.0;
  std::size_t pairs = 0;
  double t_a_ns = 0.0;
};

// Residual optical phase from symmetric bin pairs |tau| in (T, t_a]: Lambda(tau)
// + Lambda(-tau) = 2 Lambda0 because Xi is odd in tau. The pair sums fix
// Lambda0 modulo pi; the branch is the one the raw profile points along, or
// the one closest to `branch_hint` when given. t_a defaults to the largest
// |tau| where both wings are valid.
Lambda0Estimate estimate_lambda0(const LambdaProfile& profile,
                                 std::optional<double> t_a_ns = std::nullopt,
                                 std::optional<double> branch_hint = std::nullopt);

// Xi = wrap(sign * Lambda - Lambda0) on valid bins with |tau| beyond the
// mixed-term region |tau| <= T.
XiProfile compute_xi(const LambdaProfile& profile, double lambda0);

// Folds the tau < -T wing onto tau > T using Xi(-tau) = -Xi(tau): each
// positive bin becomes the weighted circular mean of Xi(tau) and -Xi(-tau).
XiProfile fold_wings(const XiProfile& xi);

struct DeltaEstimate {
  double delta = 0.0;      // rad/s
  double jump = 0.0;       // Xi(tau -> -T) - Xi(tau -> +T), wrapped to (-pi, pi]
  std::size_t window_bins = 0;
};

// Default near-edge window: max(shift, 4) bins on each wing.
std::size_t default_delta_window(const XiProfile& xi);

// delta = wrap(median Xi on the tau < -T edge window - median Xi on the tau > T
// edge window) / 2T. Throws when either window has no valid bins.
DeltaEstimate estimate_delta(const XiProfile& xi, std::optional<std::size_t> window_bins = {});

// Chooses the 2 pi branch of a long-delay jump so that jump / 2T_l is closest
// to the short-delay estimate. Returns the unwrapped jump.
double resolve_jump_branch(double jump_long, double delay_long_ns, double delta_short);

// Inclusive bin range.
struct BinInterval {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t k) const { return k >= first && k <= last; }
  friend bool operator==(const BinInterval&, const BinInterval&) = default;
};

// Maximal runs with density >= threshold * peak, restricted to tau > 0,
// ordered by tau. Throws when nothing qualifies.
std::vector<BinInterval> detect_islands(const TimeGrid& grid, std::span<const double> density,
                                        double threshold);

// Phase known on a lattice of bins spaced 2 * shift(T) apart inside one island.
struct LatticePhase {
  std::size_t reference_bin = 0;
  std::size_t step_bins = 0;
  std::vector<std::size_t> bins;  // ascending
  std::vector<double> phase;      // unwrapped, phase at reference_bin is 0
  bool truncated = false;         // recursion stopped on an invalid Xi bin

  std::optional<double> at(std::size_t bin) const;
};

// phi(x + 2T) = phi(x) + Xi(x + T) + delta T walked outward from tau0 in both
// directions while lattice points stay inside the island and Xi is valid.
LatticePhase recursive_phase(const XiProfile& xi, double tau0_ns, double delta,
                             const BinInterval& island);

struct StitchedPhase {
  std::vector<double> phase;          // per bin, NaN where undefined
  std::vector<bool> valid;
  std::vector<int> component;         // per island
  std::vector<double> island_offset;  // offset added to each island's fine solution
  std::vector<std::size_t> bridge_pairs;  // per island boundary (i, i+1)
};

// Chains islands left to right; the offset of island i+1 relative to island i
// comes from the coarse-delay step phi(x + 2T_l) = phi(x) + Xi_l(x + T_l) +
// delta T_l averaged over every bridge (x in island i, x + 2T_l in island i+1)
// where both fine solutions and the coarse Xi are available. Islands with no
// bridge start a new component. Each component is referenced to zero at its
// first island's reference bin.
StitchedPhase stitch_two_step(const std::vector<LatticePhase>& fine, const XiProfile& coarse_xi,
                              const std::vector<BinInterval>& islands, double delta,
                              std::size_t n_bins);

// A(tau) = sqrt(max(C12 - background, 0)) for tau > 0, unit L2 norm over ns.
std::vector<double> reconstruct_amplitude(const CoincidenceHistogram& c12, double background = 0.0);

// Median of the outermost 10% of bins on each side of a C12 histogram.
double estimate_background(const CoincidenceHistogram& c12);

struct TomographyPlan {
  double T_s_ns = 1.0;
  double T_l_ns = 5.8;
  double island_threshold = 0.05;
  double count_floor = 20.0;
  std::optional<double> reference_tau0_ns;  // nullopt: AUTO
  std::optional<double> t_a_ns;             // nullopt: AUTO
  std::optional<double> background = 0.0;  // per bin; nullopt: estimate from C12 tails

  void validate(double bin_width_ns) const;
};

struct ReconstructionResult {
  TimeGrid grid;
  std::vector<double> amplitude;
  std::vector<double> phase;  // NaN where not valid
  std::vector<bool> valid;
  double delta_hat = 0.0;
  double lambda0_hat = 0.0;
  double lambda0_stderr = 0.0;
  std::vector<BinInterval> islands;
  std::vector<int> components;
  std::size_t reference_bin = 0;

  // Diagnostics for plots and reports.
  double delta_short = 0.0;
  double jump_long = 0.0;  // unwrapped 2 delta T_l step across tau = 0
  double lambda0_long = 0.0;
  XiProfile xi_long;
  XiProfile xi_short;
  std::vector<bool> truncated;
};

// compute_B -> compute_lambda -> estimate_lambda0 -> compute_xi (both delays)
// -> estimate_delta -> detect_islands -> recursive_phase (T_s) -> stitch (T_l)
// -> reconstruct_amplitude. Stage failures are rethrown as StageError.
ReconstructionResult reconstruct(const SixPack& short_pack, const SixPack& long_pack,
                                 const CoincidenceHistogram& c12, const TomographyPlan& plan);

}  // namespace biphoton
