#include <doctest.h>

#include <cmath>

#include "ereem/calibration.hpp"
#include "ereem/units.hpp"
#include "hand_hamiltonian.hpp"

using namespace ereem;

namespace {

const SpeciesConstants kN15 = SpeciesConstants::n15();

double exact(double b, double theta_deg) {
  return delta_pm1(kN15, BiasField::from_degrees(b, theta_deg), SplittingMethod::Exact);
}

}  // namespace

TEST_CASE("splitting, approximate and exact") {
  CHECK(delta_pm1(kN15, BiasField::from_degrees(90, 0), SplittingMethod::Approximate) == doctest::Approx(504.432));
  CHECK(std::abs(delta_pm1(kN15, BiasField::from_degrees(90, 90), SplittingMethod::Approximate)) < 1e-12);
  for (double th : {0.0, 10.0, 25.72, 45.0}) {
    CHECK(exact(90, th) == doctest::Approx(hand_delta_pm1(hand_hamiltonian(90, th))).epsilon(1e-12));
  }
  SUBCASE("exact splitting is even in the angle") {
    for (double th : {5.0, 20.0, 45.0}) {
      const double t = units::radians(th);
      const double neg = hand_delta_pm1(hand_hamiltonian_xz(-90 * std::sin(t), 90 * std::cos(t)));
      CHECK(std::abs(exact(90, th) - neg) < 1e-9);
    }
  }
}

TEST_CASE("approximation error scan at 90 G") {
  std::vector<double> theta;
  for (int i = 0; i <= 90; ++i) theta.push_back(units::radians(0.5 * i));
  const auto scan = approximation_error_scan(kN15, 90, theta);
  REQUIRE(scan.rows.size() == theta.size());
  CHECK(scan.max_pct_deviation < 0.15);
  CHECK(std::abs(scan.rows.front().pct_deviation) < 1e-3);
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    CHECK(std::abs(scan.rows[i].pct_deviation) >= std::abs(scan.rows[i - 1].pct_deviation));
  }
  const auto& r = scan.rows[20];
  CHECK(r.theta_deg == doctest::Approx(10));
  CHECK(r.abs_deviation_mhz == doctest::Approx(std::abs(r.exact_mhz - r.approx_mhz)));
}

TEST_CASE("field estimate") {
  SUBCASE("aligned input") {
    const FieldEstimate e = estimate_field(504.432, 504.432, kN15, 0.01, 0.01);
    CHECK(e.magnitude_g == doctest::Approx(90));
    CHECK(e.theta_rad == doctest::Approx(0).scale(1));
    CHECK(units::degrees(e.theta_se_rad) >= kStageAccuracyDeg);
    CHECK(e.magnitude_se_g > 0);
  }
  SUBCASE("quoted configuration") {
    const double al = 2 * 2.8024 * 90.08;
    const FieldEstimate e = estimate_field(al, al * std::cos(units::radians(16.79)), kN15);
    CHECK(units::degrees(e.theta_rad) == doctest::Approx(16.79).epsilon(1e-12));
    CHECK(e.magnitude_g == doctest::Approx(90.08).epsilon(1e-12));
    CHECK(e.angle_floor_applied);
    CHECK(units::degrees(e.theta_se_rad) == doctest::Approx(kStageAccuracyDeg));
  }
  SUBCASE("round trip through exact splittings") {
    for (double b : {40.0, 90.08, 140.0}) {
      for (double th : {5.0, 25.72, 45.0}) {
        const FieldEstimate e = estimate_field(exact(b, 0), exact(b, th), kN15);
        CHECK(std::abs(e.magnitude_g - b) / b < 0.002);
        CHECK(std::abs(units::degrees(e.theta_rad) - th) < 0.3);
      }
    }
  }
  SUBCASE("floor switched off") {
    const FieldEstimate e = estimate_field(500, 400, kN15, 1e-6, 1e-6, false);
    CHECK_FALSE(e.angle_floor_applied);
    CHECK(units::degrees(e.theta_se_rad) < kStageAccuracyDeg);
  }
  CHECK_THROWS_AS(estimate_field(400, 500, kN15), std::invalid_argument);
  CHECK_THROWS_AS(estimate_field(0, 0, kN15), std::invalid_argument);
}

TEST_CASE("microwave center calibration") {
  const auto onu = linear_grid(2611.5, 2627.5, 401);
  const auto fnu = linear_grid(2617.5, 2621.5, 201);
  SyntheticDoublet d;
  const auto odmr = synthetic_odmr(d, onu);
  SUBCASE("unshifted fringe keeps nu*") {
    SyntheticFringe s;
    const auto cal = mw_center_frequency(onu, odmr, fnu, synthetic_fringe(s, fnu));
    CHECK(cal.nu_star_mhz == doctest::Approx(2619.5).epsilon(1e-10));
    CHECK(std::abs(cal.correction_mhz) < 1e-7);
    CHECK(cal.detunings_mhz[0] == doctest::Approx(1.515).epsilon(1e-6));
    CHECK(cal.detunings_mhz[1] == doctest::Approx(1.515).epsilon(1e-6));
    CHECK(cal.fringe_period_mhz == doctest::Approx(3.03).epsilon(1e-6));
  }
  SUBCASE("shifted fringe is recovered") {
    SyntheticFringe s;
    s.center_mhz = 2619.5 + 0.12;
    s.noise = 0.003;
    s.seed = 4;
    const auto cal = mw_center_frequency(onu, odmr, fnu, synthetic_fringe(s, fnu));
    const double se = cal.fringe.std_errors[3] / std::abs(cal.fringe.params[2]);
    CHECK(std::abs(cal.correction_mhz - 0.12) < 4 * se + 1e-6);
    CHECK(std::abs(cal.nu_calibrated_mhz - 2619.62) < 0.01);
  }
  SUBCASE("no extremum inside the scanned range") {
    SyntheticFringe s;
    s.tau_us = 0.02;  // fringe far wider than the scan
    const auto narrow = linear_grid(2619.4, 2619.45, 32);
    CHECK_THROWS_AS(mw_center_frequency(onu, odmr, narrow, synthetic_fringe(s, narrow)), NumericalError);
  }
}
