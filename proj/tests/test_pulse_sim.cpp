#include <doctest.h>

#include <cmath>

#include "ereem/pulse_sim.hpp"
#include "hand_hamiltonian.hpp"
#include "ereem/units.hpp"

using namespace ereem;

namespace {

const SpeciesConstants kN15 = SpeciesConstants::n15();

}  // namespace

TEST_CASE("transition frequencies") {
  SUBCASE("zero field") {
    const auto t = transition_frequencies(kN15, BiasField{0, 0});
    for (const auto* m : {&t.plus, &t.minus}) {
      for (double f : m->frequencies_mhz) CHECK(std::abs(f - 2870) < 3.65);
    }
  }
  SUBCASE("aligned 90 G against a hand-built hamiltonian") {
    const auto t = transition_frequencies(kN15, BiasField::from_degrees(90, 0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hand_hamiltonian(90, 0));
    const Eigen::VectorXd e = es.eigenvalues();  // m_s=0 pair, then -1 pair, then +1 pair
    const double plus_mean = (e(4) + e(5)) / 2 - (e(0) + e(1)) / 2;
    const double minus_mean = (e(2) + e(3)) / 2 - (e(0) + e(1)) / 2;
    CHECK(t.plus.mean_mhz == doctest::Approx(plus_mean).epsilon(1e-10));
    CHECK(t.minus.mean_mhz == doctest::Approx(minus_mean).epsilon(1e-10));
    const double split = std::abs(t.plus.frequencies_mhz[0] - t.plus.frequencies_mhz[1]);
    CHECK(split == doctest::Approx(3.03).epsilon(0.01));
    CHECK_FALSE(t.plus.nuclear_labels_ambiguous());
  }
  SUBCASE("splitting at 45 degrees") {
    const auto t = transition_frequencies(kN15, BiasField::from_degrees(90, 45));
    const double exact = t.plus.mean_mhz - t.minus.mean_mhz;
    const double approx = 2 * 2.8024 * 90 * std::cos(std::numbers::pi / 4);
    CHECK(std::abs(exact - approx) / exact < 0.0015);
  }
}

TEST_CASE("pulse calibration") {
  PulseSpec spec;
  spec.rabi_mhz = 20;
  CHECK(nominal_pulse_duration(spec, Protocol::SqPlus) == doctest::Approx(0.0125));
  const auto f = BiasField::from_degrees(100, 0);
  const double t20 = calibrate_pulse_duration(kN15, f, spec, Protocol::SqPlus);
  CHECK(std::abs(t20 - 0.0125) / 0.0125 < 0.10);
  spec.rabi_mhz = 40;
  const double t40 = calibrate_pulse_duration(kN15, f, spec, Protocol::SqPlus);
  CHECK(t40 == doctest::Approx(t20 / 2).epsilon(0.01));
  PulseSpec bad;
  bad.rabi_mhz = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("free evolution: eigendecomposition against fine stepping") {
  const ComplexMatrix h = lab_hamiltonian(kN15, BiasField::from_degrees(100, 15));
  const double tau = 0.37;
  const int steps = 10000;
  std::vector<Segment> segs(steps, Segment{h, tau / steps});
  const ComplexMatrix stepped = piecewise_propagator(segs, h.rows());
  const ComplexMatrix exact = hermitian_exponential<double>(h, tau);
  CHECK((stepped - exact).operatorNorm() < 1e-8);
}

TEST_CASE("sequence propagator is unitary") {
  for (Protocol p : {Protocol::SqPlus, Protocol::Dq}) {
    const ComplexMatrix u = ramsey_sequence_propagator(kN15, BiasField::from_degrees(100, 15), p, 2.5);
    CHECK(unitarity_error(u) < 1e-10);
  }
}

TEST_CASE("simulated traces") {
  SUBCASE("aligned field follows the closed form after linear alignment") {
    // Detuned evolution during the pulses acts as a small effective delay.
    const auto f = BiasField::from_degrees(90, 0);
    const auto tau = linear_grid(0, 4, 160);
    const RamseyTrace sim = simulate_ramsey_trace(kN15, f, Protocol::SqPlus, tau);
    double best = 1;
    double best_shift = 0;
    for (int k = 0; k <= 100; ++k) {
      const double shift = 0.0005 * k;
      std::vector<double> shifted;
      for (double t : tau) shifted.push_back(t + shift);
      const RamseyTrace ana = analytic_trace(kN15, f, Protocol::SqPlus, shifted);
      Eigen::MatrixXd a(tau.size(), 2);
      Eigen::VectorXd y(tau.size());
      for (std::size_t i = 0; i < tau.size(); ++i) {
        a(i, 0) = ana.signal[i];
        a(i, 1) = 1;
        y(i) = sim.signal[i];
      }
      const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
      const double worst = (a * coef - y).cwiseAbs().maxCoeff();
      if (worst < best) {
        best = worst;
        best_shift = shift;
      }
    }
    CHECK(best < 0.02);
    CHECK(best_shift < 0.04);  // below a few pulse lengths
    const auto cc = crosscheck_envelope(sim);
    CHECK(std::abs(cc.chi_min_sim - 1) < 0.01);
  }
  SUBCASE("100 G, 15 degrees beat frequency") {
    const auto f = BiasField::from_degrees(100, 15);
    const RamseyTrace sim = simulate_ramsey_trace(kN15, f, Protocol::SqPlus, default_tau_grid(kN15, f, Protocol::SqPlus));
    for (double s : sim.signal) {
      CHECK(s >= -1e-9);
      CHECK(s <= 1 + 1e-9);
    }
    const auto cc = crosscheck_envelope(sim);
    CHECK(std::abs(cc.omega0_deviation_pct) < 1.0);
    CHECK(cc.chi_min_sim == doctest::Approx(cc.chi_min_analytic).epsilon(0.02));
  }
  SUBCASE("DQ at 50 G, 35 degrees shows no modulation") {
    const auto f = BiasField::from_degrees(50, 35);
    const RamseyTrace sim = simulate_ramsey_trace(kN15, f, Protocol::Dq, default_tau_grid(kN15, f, Protocol::Dq, 384));
    const auto cc = crosscheck_envelope(sim);
    CHECK(1 - cc.chi_min_sim < 0.02);
  }
  SUBCASE("closure on an analytic trace") {
    const auto f = BiasField::from_degrees(100, 15);
    const RamseyTrace ana = analytic_trace(kN15, f, Protocol::SqPlus, default_tau_grid(kN15, f, Protocol::SqPlus));
    const auto cc = crosscheck_envelope(ana);
    CHECK(std::abs(cc.omega0_deviation_pct) < 0.01);
    CHECK(std::abs(cc.chi_min_deviation_pct) < 0.01);
  }
}

TEST_CASE("simulation output is independent of the thread count") {
  const auto f = BiasField::from_degrees(65, 20);
  const auto tau = linear_grid(0, 6, 48);
  SimulationOptions one, many;
  one.threads = 1;
  many.threads = 3;
  const auto a = simulate_ramsey_trace(kN15, f, Protocol::SqPlus, tau, one);
  const auto b = simulate_ramsey_trace(kN15, f, Protocol::SqPlus, tau, many);
  CHECK(a.signal == b.signal);
}

TEST_CASE("initial states and species") {
  const auto f = BiasField::from_degrees(65, 20);
  const auto tau = linear_grid(0, 3, 16);
  SimulationOptions opt;
  opt.initial_state = "unpolarized";
  CHECK_NOTHROW(simulate_ramsey_trace(kN15, f, Protocol::SqPlus, tau, opt));
  opt.initial_state = "1,1/2";
  CHECK_THROWS_AS(simulate_ramsey_trace(kN15, f, Protocol::SqPlus, tau, opt), std::invalid_argument);
  opt.initial_state = "0,-1";
  const auto n14 = simulate_ramsey_trace(SpeciesConstants::n14(), f, Protocol::SqPlus, tau, opt);
  for (double s : n14.signal) {
    CHECK(s >= -1e-9);
    CHECK(s <= 1 + 1e-9);
  }
  CHECK_THROWS_AS(simulate_ramsey_trace(kN15, f, Protocol::SqPlus, {0.0, 60.0}), std::invalid_argument);
  const auto grid = default_tau_grid(kN15, BiasField::from_degrees(1, 0), Protocol::SqPlus);
  CHECK(grid.size() == 512);
  CHECK(grid.back() == 50.0);
}
