#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ereem/ramsey.hpp"
#include "ereem/spectrum.hpp"
#include "ereem/units.hpp"

using namespace ereem;
using C = std::complex<double>;

namespace {

// Nuclear precession operators about explicit field vectors; the SQ signal is
// 1/2 (1 - Re Tr(U0^dag U1) / 2) and the DQ signal 1/2 (1 + Re Tr(U-1^dag U+1) / 2).
ComplexMatrix precession(const Eigen::Vector2d& field_g, double tau) {
  ComplexMatrix sx(2, 2), sz(2, 2);
  sx << 0, 0.5, 0.5, 0;
  sz << 0.5, 0, 0, -0.5;
  const double g = units::angular(431.6e-6);
  const ComplexMatrix h = g * (field_g.x() * sx + field_g.y() * sz);
  return hermitian_exponential<double>(h, tau);
}

Eigen::Vector2d field(const BiasField& f, int m) {
  const double k = -2.8024 * 3.65 / (-431.6e-6 * 2870);
  return {(1 - 2 * k + 3 * k * m * m) * f.bx(), f.bz() - m * 3.03 / -431.6e-6};
}

double overlap(const BiasField& f, int i, int j, double tau) {
  return (precession(field(f, i), tau).adjoint() * precession(field(f, j), tau)).trace().real() / 2;
}

const SpeciesConstants kN15 = SpeciesConstants::n15();

}  // namespace

TEST_CASE("signals match explicit nuclear propagators") {
  for (auto [b, th] : {std::pair{100.0, 15.0}, {50.0, 35.0}, {140.0, 5.0}, {20.0, 60.0}}) {
    const auto f = BiasField::from_degrees(b, th);
    const auto d = effective_field_decomposition(kN15, f);
    for (double tau : {0.0, 0.37, 2.9, 11.3, 47.0}) {
      CHECK(sq_signal(d, tau, true) == doctest::Approx(0.5 * (1 - overlap(f, 0, 1, tau))).epsilon(1e-10));
      CHECK(sq_signal(d, tau, false) == doctest::Approx(0.5 * (1 - overlap(f, 0, -1, tau))).epsilon(1e-10));
      CHECK(dq_signal(d, tau) == doctest::Approx(0.5 * (1 + overlap(f, -1, 1, tau))).epsilon(1e-10));
    }
  }
}

TEST_CASE("boundary values") {
  const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(100, 15));
  CHECK(sq_signal(d, 0, true) == 0.0);
  CHECK(dq_signal(d, 0) == 1.0);
  CHECK(signed_signal(0.25) == -0.5);
  CHECK(protocol_from_string("dq") == Protocol::Dq);
  CHECK(to_string(Protocol::SqMinus) == "sq-");
  CHECK_THROWS_AS(protocol_from_string("sqx"), std::invalid_argument);
}

TEST_CASE("signals stay inside [0, 1]") {
  for (auto [b, th] : {std::pair{100.0, 15.0}, {90.0, 10.0}, {200.0, 40.0}, {50.0, 35.0}}) {
    const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(b, th));
    double lo = 1, hi = 0;
    for (int i = 0; i <= 100000; ++i) {
      const double tau = 50.0 * i / 100000;
      for (Protocol p : {Protocol::SqPlus, Protocol::SqMinus, Protocol::Dq}) {
        const double s = ramsey_signal(d, p, tau);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    }
    CHECK(lo >= -1e-15);
    CHECK(hi <= 1 + 1e-15);
  }
}

TEST_CASE("envelope depth") {
  SUBCASE("aligned field has no modulation") {
    const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(90, 0));
    for (Protocol p : {Protocol::SqPlus, Protocol::SqMinus, Protocol::Dq}) {
      CHECK(std::abs(envelope_properties(d, p).chi_min - 1) < 1e-10);
    }
  }
  SUBCASE("90 G, 10 degrees") {
    const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(90, 10));
    CHECK(envelope_properties(d, Protocol::SqPlus).chi_min == doctest::Approx(0.3).epsilon(0.17));
  }
  SUBCASE("100 G, 15 degrees") {
    const auto f = BiasField::from_degrees(100, 15);
    const auto d = effective_field_decomposition(kN15, f);
    const auto e = envelope_properties(d, Protocol::SqPlus);
    const double phi = std::acos(field(f, 0).normalized().dot(field(f, 1).normalized()));
    CHECK(e.chi_min == doctest::Approx(std::abs(std::cos(phi))).epsilon(1e-10));
    CHECK(e.chi_min == doctest::Approx(0.20).epsilon(0.01));
    CHECK(e.period_us == doctest::Approx(units::two_pi / omega0(kN15, f)));
  }
}

TEST_CASE("numerical envelope extrema agree with chi_min") {
  // Long record binned by the slow phase; the largest |signal| per bin traces
  // the fringe amplitude.
  for (auto [b, th] : {std::pair{100.0, 15.0}, {65.0, 20.0}}) {
    const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(b, th));
    const auto e = envelope_properties(d, Protocol::SqPlus);
    const int bins = 1000;
    std::vector<double> amp(bins, 0.0);
    const int n = 2000000;
    const double t_end = 150 * e.period_us;
    for (int i = 0; i < n; ++i) {
      const double tau = t_end * i / n;
      const double slow = std::fmod(d.omega(0) * tau / 2, std::numbers::pi);
      const int k = std::min(bins - 1, static_cast<int>(slow / std::numbers::pi * bins));
      amp[k] = std::max(amp[k], std::abs(signed_signal(sq_signal(d, tau, true))));
    }
    const auto [lo, hi] = std::minmax_element(amp.begin(), amp.end());
    CHECK(*lo == doctest::Approx(e.chi_min).epsilon(1e-3));
    CHECK(*hi == doctest::Approx(1.0).epsilon(1e-4));
    double elo = 2, ehi = 0;
    for (double t : linear_grid(0, e.period_us, 20001)) {
      elo = std::min(elo, envelope(d, Protocol::SqPlus, t));
      ehi = std::max(ehi, envelope(d, Protocol::SqPlus, t));
    }
    CHECK(elo == doctest::Approx(e.chi_min).epsilon(1e-6));
    CHECK(ehi == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("spectrum shows two peaks split by the beat frequency") {
  const auto f = BiasField::from_degrees(100, 15);
  const auto d = effective_field_decomposition(kN15, f);
  const double t_end = 200 * units::two_pi / d.omega(1);
  const auto tau = linear_grid(0, t_end, 8192);
  std::vector<double> s(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) s[i] = sq_signal(d, tau[i], true);
  const Periodogram pg = periodogram(tau, s, 8);
  const auto peaks = find_peaks(pg, 4, 0.05);
  REQUIRE(peaks.size() == 2);
  const double split = std::abs(peaks[0].frequency_mhz - peaks[1].frequency_mhz);
  CHECK(std::abs(split - units::mhz(d.omega(0))) < 1.0 / t_end);
  const double centre = (peaks[0].frequency_mhz + peaks[1].frequency_mhz) / 2;
  CHECK(centre == doctest::Approx(units::mhz(d.omega(1)) / 2).epsilon(1e-3));
}

TEST_CASE("DQ suppression ordering") {
  for (double b = 10; b <= 200; b += 10) {
    for (double th = 2; th <= 40; th += 2) {
      const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(b, th));
      const double sq = 1 - envelope_properties(d, Protocol::SqPlus).chi_min;
      const double dq = 1 - envelope_properties(d, Protocol::Dq).chi_min;
      CHECK(dq <= sq);
    }
  }
  const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(50, 35));
  CHECK(envelope_properties(d, Protocol::Dq).chi_min > 0.98);
  const auto hi = effective_field_decomposition(kN15, BiasField::from_degrees(800, 80));
  CHECK(envelope_properties(hi, Protocol::Dq).chi_min < 0.5);
}

TEST_CASE("EREEM fit model") {
  EreemFitParams p;
  p.c0 = 0.4;
  p.t2_star_us = 7;
  p.stretch = 1.3;
  p.omega0 = 1.1;
  p.omega_p1 = 19;
  p.phi = 1.2;
  p.x0 = 0.3;
  p.x_p1 = -0.8;
  p.offset = 0.5;

  SUBCASE("value at zero") {
    const double expected = -0.4 * std::cos(0.3) * std::cos(-0.8) - 0.4 * std::cos(1.2) * std::sin(0.3) * std::sin(-0.8) + 0.5;
    CHECK(ereem_fit_model(p, 0) == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("reduces to the closed-form signal") {
    const auto d = effective_field_decomposition(kN15, BiasField::from_degrees(100, 15));
    EreemFitParams q;
    q.c0 = 1;
    q.t2_star_us = std::numeric_limits<double>::infinity();
    q.omega0 = d.omega(0);
    q.omega_p1 = d.omega(1);
    q.phi = relative_angle(d, 0, 1);
    for (double tau : {0.0, 1.3, 7.7, 21.0}) {
      CHECK(ereem_fit_model(q, tau) == doctest::Approx(signed_signal(sq_signal(d, tau, true))).epsilon(1e-12));
    }
  }
  SUBCASE("product form at phi = 0") {
    EreemFitParams q = p;
    q.phi = 0;
    for (double tau : {0.5, 3.0}) {
      const double e = std::exp(-std::pow(tau / q.t2_star_us, q.stretch));
      const double a = q.omega0 * tau / 2 + q.x0, b = q.omega_p1 * tau / 2 + q.x_p1;
      CHECK(ereem_fit_model(q, tau) == doctest::Approx(-q.c0 * e * std::cos(a - b) + q.offset).epsilon(1e-13));
    }
  }
  SUBCASE("gradient matches central differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 20);
    Eigen::VectorXd g(EreemFitParams::count);
    for (int trial = 0; trial < 20; ++trial) {
      const double tau = u(rng);
      ereem_fit_gradient(p, tau, g);
      const Eigen::VectorXd v = p.to_vector();
      for (std::size_t k = 0; k < EreemFitParams::count; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(v[k]));
        Eigen::VectorXd up = v, dn = v;
        up[k] += h;
        dn[k] -= h;
        const double fd = (ereem_fit_model(EreemFitParams::from_vector(up), tau) -
                           ereem_fit_model(EreemFitParams::from_vector(dn), tau)) / (2 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
      }
    }
  }
  CHECK(EreemFitParams::names()[EreemFitParams::Phi] == "Phi");
}

TEST_CASE("four-tone model") {
  FourToneParams p;
  p.delta_a = 4.0;
  p.delta_b = -9.0;
  p.omega0 = 1.2;
  p.amplitude = {0.1, 0.2, 0.15, 0.05};
  p.phase = {0.1, -0.4, 2.0, 1.0};
  p.t2_star_us = 6;
  p.stretch = 1.1;
  p.offset = 0.5;
  const auto w = p.tone_frequencies();
  CHECK(w[0] == doctest::Approx(3.4));
  CHECK(w[3] == doctest::Approx(9.6));

  SUBCASE("zero splitting collapses to two tones") {
    FourToneParams q = p;
    q.omega0 = 0;
    q.t2_star_us = std::numeric_limits<double>::infinity();
    q.offset = 0;
    for (double tau : {0.2, 1.7}) {
      const double expected = 0.1 * std::cos(4 * tau + 0.1) + 0.2 * std::cos(4 * tau - 0.4) +
                              0.15 * std::cos(9 * tau + 2.0) + 0.05 * std::cos(9 * tau + 1.0);
      CHECK(four_tone_model(q, tau) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  SUBCASE("gradient") {
    Eigen::VectorXd g(FourToneParams::count);
    for (double tau : {0.3, 2.2, 9.1}) {
      four_tone_gradient(p, tau, g);
      const Eigen::VectorXd v = p.to_vector();
      for (std::size_t k = 0; k < FourToneParams::count; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(v[k]));
        Eigen::VectorXd up = v, dn = v;
        up[k] += h;
        dn[k] -= h;
        const double fd = (four_tone_model(FourToneParams::from_vector(up), tau) -
                           four_tone_model(FourToneParams::from_vector(dn), tau)) / (2 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
      }
    }
  }
  SUBCASE("resolvability boundary") {
    CHECK_FALSE(four_tone_resolvable(4.0, 5.2, 1.2));
    CHECK(four_tone_resolvable(4.0, 7.7, 1.2));
  }
}

TEST_CASE("traces and degradation") {
  const auto f = BiasField::from_degrees(100, 15);
  const auto tau = linear_grid(0, 10, 101);
  CHECK(tau[1] == doctest::Approx(0.1));
  CHECK_THROWS_AS(linear_grid(0, 1, 1), std::invalid_argument);
  const RamseyTrace t = analytic_trace(kN15, f, Protocol::SqPlus, tau);
  CHECK(t.size() == 101);
  CHECK(t.meta.source == "analytic");
  const RamseyTrace a = degrade_trace(t, 5, 1, 0.01, 42);
  const RamseyTrace b = degrade_trace(t, 5, 1, 0.01, 42);
  CHECK(a.signal == b.signal);
  const RamseyTrace clean = degrade_trace(t, 5, 1, 0, 0);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    CHECK(clean.signal[i] - 0.5 == doctest::Approx((t.signal[i] - 0.5) * std::exp(-tau[i] / 5)).epsilon(1e-14));
  }
  RamseyTrace bad = t;
  std::swap(bad.tau_us[3], bad.tau_us[4]);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
