#pragma once

// NV ground-state Hamiltonians and the effective-nuclear-field vector model.
//
// Constants are stored in ordinary-frequency units (MHz, MHz/G) with the signs
// of the gyromagnetic ratios kept as physical signs. Matrices and Larmor
// frequencies returned from this header are angular (rad/us).

#include <Eigen/Dense>

#include <array>
#include <string>

#include "ereem/spincore.hpp"

namespace ereem {

enum class Species { N15, N14 };

std::string to_string(Species s);
Species species_from_string(const std::string& name);

struct SpeciesConstants {
  Species species = Species::N15;
  double zero_field_mhz = 2870.0;
  double gamma_e_mhz_per_g = -2.8024;
  double gamma_n_mhz_per_g = -431.6e-6;
  double a_perp_mhz = 3.65;
  double a_par_mhz = 3.03;
  double quadrupole_mhz = 0.0;
  double nuclear_spin = 0.5;

  static SpeciesConstants n15();
  // Hyperfine and gyromagnetic values for 14N are literature inputs; only Q
  // is pinned by the EREEM analysis.
  static SpeciesConstants n14();
  static SpeciesConstants defaults(Species s) { return s == Species::N15 ? n15() : n14(); }

  void validate() const;
  Eigen::Index nuclear_dim() const { return nuclear_spin == 1.0 ? 3 : 2; }
  Eigen::Index dim() const { return 3 * nuclear_dim(); }
};

/// Bias field restricted to the NV x-z plane.
struct BiasField {
  double magnitude_g = 0;
  double theta_rad = 0;  // misalignment from the NV axis

  static BiasField from_degrees(double magnitude_g, double theta_deg);

  double bx() const;
  double bz() const;
  void validate() const;
  // Second-order perturbation theory is only trusted below this field.
  bool beyond_perturbative_regime() const { return magnitude_g > 200.0; }
};

/// kappa = gamma_e A_perp / (gamma_n D), the transverse enhancement factor.
double kappa(const SpeciesConstants& c);

/// Full lab-frame Hamiltonian (rad/us) in the basis |m_s> (x) |m_I>, both
/// ordered by descending projection.
ComplexMatrix lab_hamiltonian(const SpeciesConstants& c, const BiasField& f);

/// Second-order effective Hamiltonian in the doubly rotating electronic frame.
/// Block diagonal in m_s; same basis ordering as lab_hamiltonian.
ComplexMatrix rotating_hamiltonian(const SpeciesConstants& c, const BiasField& f);

/// Basis index of |m_s, m_I> in the ordering used by the Hamiltonians.
Eigen::Index basis_index(const SpeciesConstants& c, int ms, double mi);

struct EffectiveFieldDecomposition {
  double kappa = 0;
  double beta_ind = 0;  // G, along z'
  // (x', z') components of beta(m_s) in G, indexed by m_s + 1.
  std::array<Eigen::Vector2d, 3> beta_ms{};
  std::array<double, 3> phi_ms{};    // signed angle from z', rad
  std::array<double, 3> omega_ms{};  // rad/us

  const Eigen::Vector2d& beta(int ms) const { return beta_ms.at(ms + 1); }
  double phi(int ms) const { return phi_ms.at(ms + 1); }
  double omega(int ms) const { return omega_ms.at(ms + 1); }
  /// beta_ind z' + beta(m_s), in (x', z') components.
  Eigen::Vector2d total_field(int ms) const;
};

EffectiveFieldDecomposition effective_field_decomposition(const SpeciesConstants& c, const BiasField& f);

/// Angle between the effective nuclear fields of electronic states i and j, in [0, pi].
double relative_angle(const EffectiveFieldDecomposition& d, int i, int j);

/// Envelope beat frequency |gamma_n beta_ind| in rad/us.
double omega0(const SpeciesConstants& c, const BiasField& f);

/// Key/value text table of the constants, MHz and gauss units.
std::string constants_table(const SpeciesConstants& c);

}  // namespace ereem
