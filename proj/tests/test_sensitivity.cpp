#include <doctest.h>

#include <cmath>

#include "ereem/sensitivity.hpp"
#include "ereem/units.hpp"

using namespace ereem;

namespace {

// Stationary point of tau exp(-tau/T) / sqrt(tau + T_D).
double tau_opt_closed_form(double t2, double td) {
  const double b = t2 - 2 * td;
  return (b + std::sqrt(b * b + 16 * t2 * td)) / 4;
}

int count_local_maxima(const Eigen::RowVectorXd& v) {
  int n = 0;
  for (Eigen::Index i = 1; i + 1 < v.size(); ++i) n += v[i] > v[i - 1] && v[i] >= v[i + 1];
  return n;
}

}  // namespace

TEST_CASE("shot-noise sensitivity") {
  SensitivityParams sp;
  CHECK_THROWS_AS(shot_noise_sensitivity(sp, 0), std::invalid_argument);
  CHECK(inverse_sensitivity(sp, 0) == 0.0);
  CHECK(inverse_sensitivity(sp, 1e-9) < 1e-6);
  const double tau = 2.7;
  const double expected = 1 / (units::angular(2.8024) * std::exp(-tau / 5)) * std::sqrt(tau + 5) / tau;
  CHECK(shot_noise_sensitivity(sp, tau) == doctest::Approx(expected).epsilon(1e-14));
  SensitivityParams sp2 = sp;
  sp2.photons = 2;
  for (double t : {0.5, 3.0, 9.0}) {
    CHECK(shot_noise_sensitivity(sp2, t) == doctest::Approx(shot_noise_sensitivity(sp, t) / std::sqrt(2.0)).epsilon(1e-14));
  }
  SensitivityParams bad = sp;
  bad.t2_star_us = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("optimal evolution time") {
  SensitivityParams sp;
  const WorkingPoint w = optimal_evolution_time(sp);
  CHECK(w.tau_us == doctest::Approx(tau_opt_closed_form(5, 5)).epsilon(1e-6));
  CHECK(w.tau_us == doctest::Approx(3.9).epsilon(2e-3));
  CHECK(w.bracketed);
  const WorkingPoint w1 = optimal_evolution_time(sp, [](double) { return 1.0; });
  CHECK(w1.tau_us == doctest::Approx(w.tau_us).epsilon(1e-9));

  SensitivityParams long_dead = sp;
  long_dead.dead_time_us = 1000 * sp.t2_star_us;
  const WorkingPoint wl = optimal_evolution_time(long_dead);
  CHECK(std::abs(wl.tau_us - sp.t2_star_us) / sp.t2_star_us < 0.02);
  CHECK(wl.tau_us == doctest::Approx(tau_opt_closed_form(5, 5000)).epsilon(1e-6));
}

TEST_CASE("relative inverse sensitivity") {
  SensitivityParams sp;
  const double t = optimal_evolution_time(sp).tau_us;
  CHECK(relative_inverse_sensitivity(sp, t, 1.0, t) == 1.0);
  // below one everywhere else for an unmodulated signal
  for (double tau : {0.5, 2.0, 6.0, 15.0}) CHECK(relative_inverse_sensitivity(sp, t, 1.0, tau) < 1.0);
  // ratio of inverse sensitivities
  for (double tau : {1.0, 4.4}) {
    CHECK(relative_inverse_sensitivity(sp, t, 0.7, tau) ==
          doctest::Approx(0.7 * inverse_sensitivity(sp, tau) / inverse_sensitivity(sp, t)).epsilon(1e-12));
  }
}

TEST_CASE("envelope-adjusted working point") {
  SensitivityParams sp;
  const auto c = SpeciesConstants::n15();
  const auto tau = GridDefaults::tau(sp);
  CHECK(tau.size() == 2000);
  CHECK(tau.back() == doctest::Approx(20));
  const auto curve = relative_sensitivity_curve(c, sp, Protocol::SqPlus, BiasField::from_degrees(100, 10), tau);
  CHECK(curve.adjusted_ratio < 1.0);
  CHECK(curve.adjusted.tau_us != doctest::Approx(curve.tau_opt_us));

  // envelope maximum placed exactly on tau_opt
  const double t = optimal_evolution_time(sp).tau_us;
  const auto chi = [t](double x) {
    const double a = std::numbers::pi * x / t;
    return std::sqrt(std::cos(a) * std::cos(a) + 0.04 * std::sin(a) * std::sin(a));
  };
  const WorkingPoint adj = optimal_evolution_time(sp, chi);
  CHECK(adj.tau_us == doctest::Approx(t).epsilon(1e-6));
  CHECK(adj.inverse_eta == doctest::Approx(inverse_sensitivity(sp, t)).epsilon(1e-9));
}

TEST_CASE("chi_min maps") {
  const auto c = SpeciesConstants::n15();
  const std::vector<double> fields{20, 90, 150, 200};
  const std::vector<double> theta{0, units::radians(10), units::radians(20), units::radians(40)};
  const SensitivityGrid sq = chi_min_map(c, Protocol::SqPlus, fields, theta);
  const SensitivityGrid dq = chi_min_map(c, Protocol::Dq, fields, theta);
  REQUIRE(sq.values.rows() == 4);
  REQUIRE(sq.values.cols() == 4);
  CHECK(sq.rows.unit == "deg");
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(sq.values(0, j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dq.values(0, j) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const auto d = effective_field_decomposition(c, BiasField{fields[j], theta[i]});
      CHECK(sq.values(i, j) == doctest::Approx(std::abs(std::cos(relative_angle(d, 0, 1)))).epsilon(1e-12));
      CHECK(1 - dq.values(i, j) <= 1 - sq.values(i, j) + 1e-15);
    }
  }
  // SQ nodes nearly vanish by ~10-20 degrees at these fields
  CHECK(sq.values.row(2).minCoeff() < 0.1);
  CHECK(dq.values.bottomRows(3).minCoeff() > 0.9);
}

TEST_CASE("relative sensitivity map oscillates faster at higher field") {
  SensitivityParams sp;
  const auto c = SpeciesConstants::n15();
  const auto tau = GridDefaults::tau(sp);
  const SensitivityGrid g = relative_sensitivity_map(c, sp, Protocol::SqPlus, units::radians(10), {50, 150}, tau);
  CHECK(count_local_maxima(g.values.row(1)) > count_local_maxima(g.values.row(0)));
  CHECK(g.values.maxCoeff() <= 1.0 + 1e-12);
  CHECK(g.values.minCoeff() >= 0.0);
  // 54.7 degrees is computable
  const SensitivityGrid m = relative_sensitivity_map(c, sp, Protocol::SqPlus, units::radians(54.7), {30, 60}, tau);
  CHECK(m.values.allFinite());
}

TEST_CASE("contours") {
  SensitivityGrid g;
  g.rows = {"y", "", linear_grid(-1, 1, 41)};
  g.cols = {"x", "", linear_grid(-1, 1, 41)};
  g.values.resize(41, 41);
  for (int i = 0; i < 41; ++i)
    for (int j = 0; j < 41; ++j) g.values(i, j) = g.cols.values[j];
  SUBCASE("plane gives a straight open line") {
    const auto lines = extract_contours(g, 0.26);
    REQUIRE(lines.size() == 1);
    CHECK_FALSE(lines[0].closed);
    for (const auto& p : lines[0].points) CHECK(p.x() == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(lines[0].points.size() == 41);
  }
  SUBCASE("cone gives a closed ring") {
    for (int i = 0; i < 41; ++i)
      for (int j = 0; j < 41; ++j) g.values(i, j) = std::hypot(g.cols.values[j], g.rows.values[i]);
    const auto lines = extract_contours(g, 0.5);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].closed);
    for (const auto& p : lines[0].points) CHECK(p.norm() == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("level outside the range") { CHECK(extract_contours(g, 5).empty()); }
}
