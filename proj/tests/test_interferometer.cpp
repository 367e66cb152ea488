#include <doctest.h>

#include <cmath>
#include <random>

#include "biphoton/interferometer.hpp"
#include "support.hpp"

using namespace biphoton;
using fixture::eq4;

namespace {

AcquisitionConfig acq_for(double measure_time = 10.0, double bg = 0.0) {
  return AcquisitionConfig{0.1, 1e-9, measure_time, bg, 1};
}

SourceSpec src(double delta, double rate = 1e5) { return SourceSpec{0.0, delta, delta, rate}; }

}  // namespace

TEST_CASE("projector settings") {
  const auto H = projector(Polarization::H), V = projector(Polarization::V);
  const auto D = projector(Polarization::D), A = projector(Polarization::A);
  const auto R = projector(Polarization::R), L = projector(Polarization::L);
  CHECK(H.alpha == 0.0);
  CHECK(V.alpha == doctest::Approx(kPi / 2));
  CHECK(D.alpha == doctest::Approx(kPi / 4));
  CHECK(A.alpha == doctest::Approx(-kPi / 4));
  CHECK(R.theta == doctest::Approx(kPi / 2));
  CHECK(L.theta == doctest::Approx(-kPi / 2));
  CHECK(parse_polarization("R") == Polarization::R);
  CHECK_FALSE(parse_polarization("X").has_value());
  CHECK(six_row_of(Polarization::D, Polarization::R) == SixRow::DR);
  CHECK_FALSE(six_row_of(Polarization::H, Polarization::H).has_value());
}

TEST_CASE("joint_amplitude bracket selection") {
  const auto env = fixture::rabi();
  const double delta = fixture::kDelta43;
  const auto H = projector(Polarization::H), V = projector(Polarization::V);
  const Complex i(0, 1);
  for (double T : {1.0, 5.8}) {
    for (double tau : {-30.5, -6.5, -0.5, 0.5, 3.5, 12.5, 40.5}) {
      const double sT = std::round(T);  // lattice shift used by the lookups
      const Complex hv = joint_amplitude(env, delta, H, V, T, tau);
      const Complex first = std::exp(-i * delta * (tau - T) * 1e-9) * envelope_at(env, tau - sT) +
                            envelope_at(env, sT - tau);
      CHECK(std::abs(hv - 0.5 * first) < 1e-15);
      const Complex vh = joint_amplitude(env, delta, V, H, T, tau);
      const Complex second = std::exp(i * delta * T * 1e-9) * envelope_at(env, -tau - sT) +
                             std::exp(-i * delta * tau * 1e-9) * envelope_at(env, tau + sT);
      CHECK(std::abs(vh + 0.5 * second) < 1e-15);
    }
  }
}

TEST_CASE("joint_amplitude DD at T = 0 by hand expansion") {
  // cos(pi/4) sin(pi/4) = 1/2 on both brackets; with T = 0 and delta = 0 both
  // brackets equal psi(tau) + psi(-tau), so the amplitude cancels exactly.
  const auto env = fixture::expo();
  const auto D = projector(Polarization::D);
  const Complex z = joint_amplitude(env, 0.0, D, D, 0.0, 5.0);
  const Complex by_hand = 0.25 * (envelope_at(env, 5.0) + envelope_at(env, -5.0)) -
                          0.25 * (envelope_at(env, -5.0) + envelope_at(env, 5.0));
  CHECK(std::abs(z - by_hand) < 1e-15);
  CHECK(std::abs(z) < 1e-15);
  CHECK(std::abs(envelope_at(env, 5.0)) > 0.0);
}

TEST_CASE("joint_amplitude rejects half-bin delays") {
  const auto env = fixture::expo();
  const auto H = projector(Polarization::H), V = projector(Polarization::V);
  CHECK_THROWS_AS(joint_amplitude(env, 0.0, H, V, 0.5, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(joint_amplitude(env, 0.0, H, V, -1.0, 3.0), std::invalid_argument);
}

TEST_CASE("count law") {
  const AcquisitionConfig acq{0.1, 1e-9, 100.0, 0.0, 0};
  CHECK(coincidence_count(1e12, acq) == doctest::Approx(1e4));
  CHECK_THROWS_AS((AcquisitionConfig{0.0, 1e-9, 1, 0, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((AcquisitionConfig{1.5, 1e-9, 1, 0, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((AcquisitionConfig{0.5, 1e-9, 1, -1, 0}.validate()), std::invalid_argument);
}

TEST_CASE("expected_histogram") {
  const auto env = fixture::rabi();
  const auto g = env.grid();
  const auto H = projector(Polarization::H);
  const auto acq = acq_for();

  SUBCASE("HH is identically zero") {
    const auto h = expected_histogram(env, src(0.3e8), H, H, 5.8, acq, g);
    for (double v : h.values) CHECK(v == 0.0);
  }

  SUBCASE("per-bin oracle for every setting and both delays") {
    const double scale = 1e5 * 0.1 * 1e-9 * 10.0 * 1e9;  // |psi|^2 is per ns
    for (double T : {1.0, 5.8}) {
      for (auto row : kSixRows) {
        const auto [p3, p4] = settings_of(row);
        const auto s3 = projector(p3), s4 = projector(p4);
        const auto h =
            expected_histogram(env, src(fixture::kDelta43), s3, s4, T, acq, g, 0.3);
        CHECK(h.kind == HistogramKind::Expected);
        CHECK(h.delay_ns == T);
        for (std::size_t k = 0; k < g.n_bins; ++k) {
          // The oracle takes the lattice delay for lookups via rounding tau +- T
          // into the containing bin, which is what lookup() does with T = 5.8.
          const double want =
              std::norm(eq4(env, fixture::kDelta43, s3.alpha, s3.theta, s4.alpha, s4.theta, T,
                            g.center(k), 0.3)) *
              scale;
          CHECK(fixture::rel_diff(h.values[k], want) < 1e-12);
        }
      }
    }
  }

  SUBCASE("background adds a flat floor") {
    const auto V = projector(Polarization::V);
    const auto a = expected_histogram(env, src(0), H, V, 1.0, acq_for(10.0, 0.0), g);
    const auto b = expected_histogram(env, src(0), H, V, 1.0, acq_for(10.0, 2.5), g);
    for (std::size_t k = 0; k < g.n_bins; ++k) CHECK(b.values[k] - a.values[k] == doctest::Approx(2.5));
  }

  SUBCASE("grid and bin-width mismatch") {
    const auto V = projector(Polarization::V);
    CHECK_THROWS_AS(expected_histogram(env, src(0), H, V, 1.0, acq, make_time_grid(-100, 100, 0.5)),
                    std::invalid_argument);
    AcquisitionConfig wrong = acq;
    wrong.bin_width_s = 2e-9;
    CHECK_THROWS_AS(expected_histogram(env, src(0), H, V, 1.0, wrong, g), std::invalid_argument);
  }
}

TEST_CASE("count-sum identity property") {
  // C_DD + C_DA = C_DR + C_DL = (C_HV + C_VH) / 2 for arbitrary causal envelopes.
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto g = make_time_grid(-40, 40, 1);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Complex> z(g.n_bins);
    for (std::size_t k = 0; k < g.n_bins; ++k) {
      if (g.center(k) > 0) z[k] = Complex(n01(gen), n01(gen));
    }
    const auto env = sampled_envelope(g, z);
    const double delta = u(gen) * 1e9;
    const double T = std::floor(std::abs(u(gen)) * 10) + (trial % 2 ? 0.2 : 0.0);
    const double l0 = u(gen) * kPi;
    const auto p = expected_sixpack(env, src(delta), T, acq_for(), g, l0);
    for (std::size_t k = 0; k < g.n_bins; ++k) {
      const double half = 0.5 * (p[SixRow::HV].values[k] + p[SixRow::VH].values[k]);
      CHECK(fixture::rel_diff(p[SixRow::DD].values[k] + p[SixRow::DA].values[k], half) < 1e-12);
      CHECK(fixture::rel_diff(p[SixRow::DR].values[k] + p[SixRow::DL].values[k], half) < 1e-12);
    }
  }
}

TEST_CASE("counts scale linearly in eta, measure time and pair rate") {
  const auto env = fixture::rabi();
  const auto g = env.grid();
  const auto D = projector(Polarization::D), R = projector(Polarization::R);
  const auto base = expected_histogram(env, src(1e8, 1e5), D, R, 5.8, acq_for(10.0), g);
  AcquisitionConfig a2 = acq_for(10.0);
  a2.eta = 0.3;
  const auto h_eta = expected_histogram(env, src(1e8, 1e5), D, R, 5.8, a2, g);
  const auto h_time = expected_histogram(env, src(1e8, 1e5), D, R, 5.8, acq_for(40.0), g);
  const auto h_rate = expected_histogram(env, src(1e8, 5e5), D, R, 5.8, acq_for(10.0), g);
  CHECK(h_eta.total() == doctest::Approx(3 * base.total()));
  CHECK(h_time.total() == doctest::Approx(4 * base.total()));
  CHECK(h_rate.total() == doctest::Approx(5 * base.total()));
}

TEST_CASE("gauge: a constant phase leaves every histogram unchanged") {
  const auto env = fixture::rabi();
  const auto rot = with_global_phase(env, 1.234);
  for (double T : {1.0, 5.8}) {
    const auto a = expected_sixpack(env, src(fixture::kDelta43), T, acq_for(), env.grid(), 0.3);
    const auto b = expected_sixpack(rot, src(fixture::kDelta43), T, acq_for(), env.grid(), 0.3);
    for (auto row : kSixRows) {
      for (std::size_t k = 0; k < env.grid().n_bins; ++k) {
        CHECK(fixture::rel_diff(a[row].values[k], b[row].values[k]) < 1e-12);
      }
    }
  }
}

TEST_CASE("sample_histogram") {
  const auto g = make_time_grid(-500, 500, 1);
  CoincidenceHistogram h{g, 1.0, projector(Polarization::D), projector(Polarization::A),
                         std::vector<double>(g.n_bins, 1e4), HistogramKind::Expected};
  h.values[0] = 0.0;
  const auto s1 = sample_histogram(h, 42);
  const auto s2 = sample_histogram(h, 42);
  const auto s3 = sample_histogram(h, 43);
  CHECK(s1.kind == HistogramKind::Sampled);
  CHECK(s1.values == s2.values);
  CHECK(s1.values != s3.values);
  CHECK(s1.values[0] == 0.0);
  double mean = 0.0;
  for (std::size_t k = 1; k < g.n_bins; ++k) {
    CHECK(s1.values[k] == std::floor(s1.values[k]));
    mean += s1.values[k];
  }
  mean /= static_cast<double>(g.n_bins - 1);
  // sigma of the mean: sqrt(1e4) / sqrt(999)
  CHECK(std::abs(mean - 1e4) < 3.0 * 100.0 / std::sqrt(999.0));
  CHECK_THROWS_AS(sample_histogram(s1, 1), std::invalid_argument);
}

TEST_CASE("sampling is keyed by setting and delay, not by call order") {
  const auto env = fixture::rabi();
  const auto p = expected_sixpack(env, src(0), 1.0, acq_for(), env.grid());
  const auto a = sample_sixpack(p, 7);
  const auto single = sample_histogram(p[SixRow::DR], 7);
  CHECK(a[SixRow::DR].values == single.values);
  CHECK(a[SixRow::DR].values != a[SixRow::DL].values);
}

TEST_CASE("source_coincidence") {
  const auto env = fixture::rabi();
  const auto g = env.grid();
  const auto c = source_coincidence(env, src(0), acq_for(), g);
  const double scale = 1e5 * 0.1 * 10.0;  // per unit |psi|^2 dtau
  std::size_t argmax_c = 0, argmax_a = 0;
  for (std::size_t k = 0; k < g.n_bins; ++k) {
    CHECK(c.values[k] == c.values[*g.mirror_of(k)]);
    if (g.center(k) > 0) CHECK(c.values[k] == doctest::Approx(std::norm(env[k]) * scale));
    if (g.center(k) > 0 && c.values[k] > c.values[argmax_c]) argmax_c = k;
    if (std::norm(env[k]) > std::norm(env[argmax_a])) argmax_a = k;
  }
  CHECK(argmax_c == argmax_a);
  CHECK(c.label() == "source");
  CHECK_THROWS_AS(source_coincidence(env, src(0), acq_for(), make_time_grid(-100, 300, 1)),
                  std::invalid_argument);
}

TEST_CASE("event streams") {
  const auto env = fixture::rabi();

  SUBCASE("empty without pairs or background") {
    const auto ev = generate_event_streams(env, src(0, 0.0), acq_for(), 0, 0, 1.0, 1);
    CHECK(ev.stokes.empty());
    CHECK(ev.antistokes.empty());
  }

  SUBCASE("determinism and ordering") {
    const auto a = generate_event_streams(env, src(0, 1e4), acq_for(), 1e4, 1e4, 0.5, 9);
    const auto b = generate_event_streams(env, src(0, 1e4), acq_for(), 1e4, 1e4, 0.5, 9);
    CHECK(a.stokes == b.stokes);
    CHECK(a.antistokes == b.antistokes);
    CHECK(std::is_sorted(a.stokes.begin(), a.stokes.end()));
    CHECK(std::is_sorted(a.antistokes.begin(), a.antistokes.end()));
    for (double t : a.antistokes) CHECK((t >= 0 && t <= 0.5));
  }

  SUBCASE("causality without background") {
    const auto ev = generate_event_streams(env, src(0, 1e5), acq_for(), 0, 0, 1.0, 5);
    REQUIRE(ev.stokes.size() == ev.antistokes.size());
    // If every partner is later, the i-th smallest anti-Stokes tag is later
    // than the i-th smallest Stokes tag.
    for (std::size_t i = 0; i < ev.stokes.size(); ++i) CHECK(ev.antistokes[i] > ev.stokes[i]);
  }

  SUBCASE("pair delays follow A^2 (chi-square)") {
    // 1e5 detected pairs at 1e3 / s so partners never interleave.
    const auto ev = generate_event_streams(env, src(0, 1e4), acq_for(), 0, 0, 100.0, 21);
    REQUIRE(ev.stokes.size() == ev.antistokes.size());
    const auto& g = env.grid();
    std::vector<double> hist(g.n_bins, 0.0);
    for (std::size_t i = 0; i < ev.stokes.size(); ++i) {
      const auto k = g.bin_of((ev.antistokes[i] - ev.stokes[i]) * 1e9);
      REQUIRE(k.has_value());
      hist[*k] += 1.0;
    }
    const double n = static_cast<double>(ev.stokes.size());
    CHECK(n == doctest::Approx(1e5).epsilon(0.02));
    double chi2 = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    int dof = -1;
    for (std::size_t k = 0; k < g.n_bins; ++k) {
      const double e = n * std::norm(env[k]) * g.bin_width_ns;
      if (e >= 5.0) {
        chi2 += (hist[k] - e) * (hist[k] - e) / e;
        ++dof;
      } else {
        pooled_obs += hist[k];
        pooled_exp += e;
      }
    }
    if (pooled_exp > 0) {
      chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++dof;
    }
    INFO("chi2 = " << chi2 << " dof = " << dof);
    CHECK(chi2 < dof + 5.0 * std::sqrt(2.0 * dof));
  }
}
