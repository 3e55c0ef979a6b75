#include <doctest.h>

#include <cmath>

#include "ereem/nv_model.hpp"
#include "ereem/units.hpp"

using namespace ereem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Effective nuclear field for electronic state m, unprimed (x, z), in gauss,
// from the second-order Hamiltonian written out by hand.
Eigen::Vector2d nuclear_field(double bx, double bz, int m) {
  const double ge = -2.8024, gn = -431.6e-6, ap = 3.65, apar = 3.03, d = 2870;
  const double k = ge * ap / (gn * d);
  return {(1 - 2 * k + 3 * k * m * m) * bx, bz - m * apar / gn};
}

double angle_between(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

// 2x2 block of an operator on |m_s> (x) |m_I> for a fixed m_s.
ComplexMatrix block(const ComplexMatrix& h, const SpeciesConstants& c, int ms) {
  const Eigen::Index n = c.nuclear_dim();
  const Eigen::Index i0 = basis_index(c, ms, c.nuclear_spin);
  return h.block(i0, i0, n, n);
}

double splitting(const ComplexMatrix& m) {
  const auto es = hermitian_eigensystem(m);
  return es.eigenvalues(es.eigenvalues.size() - 1) - es.eigenvalues(0);
}

}  // namespace

TEST_CASE("default constants") {
  const auto c = SpeciesConstants::n15();
  CHECK(c.zero_field_mhz == 2870.0);
  CHECK(c.gamma_e_mhz_per_g == -2.8024);
  CHECK(c.gamma_n_mhz_per_g == -431.6e-6);
  CHECK(c.a_perp_mhz == 3.65);
  CHECK(c.a_par_mhz == 3.03);
  CHECK(c.quadrupole_mhz == 0.0);
  CHECK(c.dim() == 6);
  const auto n14 = SpeciesConstants::n14();
  CHECK(n14.quadrupole_mhz == -4.945);
  CHECK(n14.nuclear_spin == 1.0);
  CHECK(n14.dim() == 9);
  CHECK(species_from_string("n14") == Species::N14);
  CHECK(to_string(Species::N15) == "n15");
  CHECK_THROWS_AS(species_from_string("c13"), std::invalid_argument);

  auto bad = c;
  bad.zero_field_mhz = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.nuclear_spin = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("field validation") {
  CHECK_THROWS_AS(BiasField::from_degrees(-1, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(BiasField::from_degrees(10, 91).validate(), std::invalid_argument);
  CHECK_NOTHROW(BiasField::from_degrees(10, 90).validate());
  CHECK(BiasField::from_degrees(201, 0).beyond_perturbative_regime());
  CHECK_FALSE(BiasField::from_degrees(200, 0).beyond_perturbative_regime());
}

TEST_CASE("enhancement factor") {
  const auto c = SpeciesConstants::n15();
  CHECK(kappa(c) == doctest::Approx(8.26).epsilon(5e-4));
  CHECK(1 - 2 * kappa(c) == doctest::Approx(-15.5).epsilon(3e-3));
  auto c2 = c;
  c2.a_perp_mhz *= 2;
  CHECK(kappa(c2) == 2 * kappa(c));
}

TEST_CASE("lab hamiltonian spectrum") {
  const auto c = SpeciesConstants::n15();
  SUBCASE("zero field") {
    const ComplexMatrix h = lab_hamiltonian(c, BiasField{0, 0});
    CHECK(hermiticity_error(h) < 1e-12);
    const auto es = hermitian_eigensystem(h);
    const double tol = units::angular(c.a_perp_mhz);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(es.eigenvalues(i)) < tol);
    for (int i = 2; i < 6; ++i) CHECK(std::abs(es.eigenvalues(i) - units::angular(c.zero_field_mhz)) < tol);
  }
  SUBCASE("aligned 100 G splitting") {
    const ComplexMatrix h = lab_hamiltonian(c, BiasField::from_degrees(100, 0));
    const auto es = hermitian_eigensystem(h);
    // states sorted: m_s=0 pair, m_s=-1... use the mean of the top and middle pairs
    const double lo = units::mhz(es.eigenvalues(2) + es.eigenvalues(3)) / 2;
    const double hi = units::mhz(es.eigenvalues(4) + es.eigenvalues(5)) / 2;
    CHECK((hi - lo) == doctest::Approx(560.48).epsilon(1.5e-3));
  }
  SUBCASE("hermitian for assorted fields") {
    for (double th : {0.0, 12.0, 45.0, 90.0}) {
      CHECK(hermiticity_error(lab_hamiltonian(c, BiasField::from_degrees(150, th))) < 1e-12);
      CHECK(hermiticity_error(lab_hamiltonian(SpeciesConstants::n14(), BiasField::from_degrees(150, th))) < 1e-12);
    }
  }
}

TEST_CASE("rotating hamiltonian structure") {
  const auto c = SpeciesConstants::n15();
  const ComplexMatrix sz = tensor_product(spin_operators<double>(1.0).sz,
                                          ComplexMatrix::Identity(2, 2).eval());
  for (double th : {0.0, 15.0, 40.0}) {
    const ComplexMatrix h = rotating_hamiltonian(c, BiasField::from_degrees(100, th));
    CHECK(hermiticity_error(h) < 1e-12);
    CHECK((h * sz - sz * h).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("aligned field keeps only Iz terms") {
    const ComplexMatrix h = rotating_hamiltonian(c, BiasField::from_degrees(100, 0));
    ComplexMatrix off = h;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("block splittings equal the nuclear Larmor frequencies") {
    const auto f = BiasField::from_degrees(100, 15);
    const ComplexMatrix h = rotating_hamiltonian(c, f);
    const auto d = effective_field_decomposition(c, f);
    CHECK(std::abs(splitting(block(h, c, 0)) - omega0(c, f)) < 1e-12);
    for (int ms : {-1, 1}) {
      const double expected = units::angular(431.6e-6) * nuclear_field(f.bx(), f.bz(), ms).norm();
      CHECK(splitting(block(h, c, ms)) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(d.omega(ms) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("effective field decomposition") {
  const auto c = SpeciesConstants::n15();
  SUBCASE("aligned") {
    const auto d = effective_field_decomposition(c, BiasField::from_degrees(100, 0));
    CHECK(d.beta_ind == doctest::Approx(100));
    for (int ms : {-1, 1}) {
      CHECK(d.beta(ms).x() == 0.0);
      CHECK(std::abs(std::sin(d.phi(ms))) < 1e-15);  // parallel or antiparallel to z'
    }
    CHECK(relative_angle(d, 0, 1) == doctest::Approx(0));
  }
  SUBCASE("100 G, 15 degrees") {
    const auto f = BiasField::from_degrees(100, 15);
    const auto d = effective_field_decomposition(c, f);
    const Eigen::Vector2d b0 = nuclear_field(f.bx(), f.bz(), 0);
    const Eigen::Vector2d b1 = nuclear_field(f.bx(), f.bz(), 1);
    CHECK(d.beta_ind == doctest::Approx(b0.norm()).epsilon(1e-12));
    CHECK(d.beta_ind == doctest::Approx(413).epsilon(2e-3));
    const double phi = angle_between(b0, b1);
    CHECK(units::degrees(phi) == doctest::Approx(78.4).epsilon(2e-3));
    CHECK(std::abs(d.phi(1)) == doctest::Approx(phi).epsilon(1e-12));
    CHECK(relative_angle(d, 0, 1) == doctest::Approx(phi).epsilon(1e-12));
    CHECK(units::mhz(d.omega(1)) == doctest::Approx(3.07).epsilon(2e-3));
    CHECK(units::mhz(d.omega(1)) / 2 == doctest::Approx(1.515).epsilon(0.02));
    // phi from the primed components agrees with the geometric angle
    for (int ms : {-1, 1}) {
      const Eigen::Vector2d t = d.total_field(ms);
      CHECK(std::abs(std::atan2(t.x(), t.y())) == doctest::Approx(std::abs(d.phi(ms))).epsilon(1e-12));
    }
  }
  SUBCASE("50 G, 35 degrees: the two outer fields are nearly antiparallel") {
    const auto d = effective_field_decomposition(c, BiasField::from_degrees(50, 35));
    CHECK(std::abs(relative_angle(d, -1, 1) - kPi) < 0.2);
  }
}

TEST_CASE("beat frequency") {
  const auto c = SpeciesConstants::n15();
  CHECK(units::mhz(omega0(c, BiasField::from_degrees(100, 0))) == doctest::Approx(0.04316).epsilon(1e-12));
  const auto f = BiasField::from_degrees(100, 15);
  CHECK(units::mhz(omega0(c, f)) == doctest::Approx(0.178).epsilon(2e-3));
  CHECK(omega0(c, f) == doctest::Approx(units::angular(431.6e-6) * nuclear_field(f.bx(), f.bz(), 0).norm()));
  const double ref = 0.2736;
  const double pred = units::mhz(omega0(c, BiasField::from_degrees(90.08, 25.72)));
  const double dev = (ref - pred) / ref;
  CHECK(dev > 0.02);
  CHECK(dev < 0.06);

  SUBCASE("linear in B and monotone in both arguments") {
    const double w1 = omega0(c, BiasField::from_degrees(37, 22));
    CHECK(omega0(c, BiasField::from_degrees(74, 22)) == doctest::Approx(2 * w1).epsilon(1e-14));
    double prev_b = 0;
    for (double b = 5; b <= 200; b += 5) {
      double prev_t = -1;
      for (double th = 0; th <= 90; th += 5) {
        const double w = omega0(c, BiasField::from_degrees(b, th));
        CHECK(w > prev_t);
        prev_t = w;
      }
      const double w = omega0(c, BiasField::from_degrees(b, 30));
      CHECK(w > prev_b);
      prev_b = w;
    }
  }
}

TEST_CASE("14N quadrupole pseudo-field suppresses the relative angle at low field") {
  const auto c = SpeciesConstants::n14();
  const auto d = effective_field_decomposition(c, BiasField::from_degrees(90, 10));
  CHECK(relative_angle(d, 0, 1) < 0.05);
}

TEST_CASE("constants table") {
  const std::string t = constants_table(SpeciesConstants::n15());
  CHECK(t.find("A_perp_mhz = 3.65") != std::string::npos);
  CHECK(t.find("A_par_mhz = 3.03") != std::string::npos);
  CHECK(t.find("D_mhz = 2870") != std::string::npos);
}
