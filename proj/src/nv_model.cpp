#include "ereem/nv_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ereem/format.hpp"
#include "ereem/units.hpp"

namespace ereem {

std::string to_string(Species s) { return s == Species::N15 ? "n15" : "n14"; }

Species species_from_string(const std::string& name) {
  if (name == "n15" || name == "N15" || name == "15N") return Species::N15;
  if (name == "n14" || name == "N14" || name == "14N") return Species::N14;
  throw std::invalid_argument("unknown species '" + name + "' (expected n15 or n14)");
}

SpeciesConstants SpeciesConstants::n15() { return SpeciesConstants{}; }

SpeciesConstants SpeciesConstants::n14() {
  SpeciesConstants c;
  c.species = Species::N14;
  c.gamma_n_mhz_per_g = 307.7e-6;
  c.a_perp_mhz = -2.70;
  c.a_par_mhz = -2.14;
  c.quadrupole_mhz = -4.945;
  c.nuclear_spin = 1.0;
  return c;
}

void SpeciesConstants::validate() const {
  if (!(zero_field_mhz > 0)) throw std::invalid_argument("zero-field splitting D must be positive");
  if (gamma_n_mhz_per_g == 0) throw std::invalid_argument("nuclear gyromagnetic ratio must be nonzero");
  if (gamma_e_mhz_per_g == 0) throw std::invalid_argument("electron gyromagnetic ratio must be nonzero");
  const double expected_spin = species == Species::N15 ? 0.5 : 1.0;
  if (nuclear_spin != expected_spin) {
    throw std::invalid_argument("nuclear spin inconsistent with species " + to_string(species));
  }
  if (species == Species::N15 && quadrupole_mhz != 0) {
    throw std::invalid_argument("a spin-1/2 nucleus has no quadrupole coupling");
  }
}

BiasField BiasField::from_degrees(double magnitude_g, double theta_deg) {
  return BiasField{magnitude_g, units::radians(theta_deg)};
}

double BiasField::bx() const { return magnitude_g * std::sin(theta_rad); }
double BiasField::bz() const { return magnitude_g * std::cos(theta_rad); }

void BiasField::validate() const {
  if (!(magnitude_g >= 0) || !std::isfinite(magnitude_g)) {
    throw std::invalid_argument("field magnitude must be finite and non-negative");
  }
  if (!(theta_rad >= 0 && theta_rad <= std::numbers::pi / 2 + 1e-12)) {
    throw std::invalid_argument("misalignment angle must lie in [0, pi/2]");
  }
}

double kappa(const SpeciesConstants& c) {
  const double denom = c.gamma_n_mhz_per_g * c.zero_field_mhz;
  if (denom == 0) throw std::invalid_argument("kappa: gamma_n * D is zero");
  return c.gamma_e_mhz_per_g * c.a_perp_mhz / denom;
}

namespace {

struct Operators {
  SpinOperators<double> e, n;
  ComplexMatrix ie, in;
};

Operators operators(const SpeciesConstants& c) {
  Operators ops{spin_operators(1.0), spin_operators(c.nuclear_spin), {}, {}};
  ops.ie = ComplexMatrix::Identity(3, 3);
  ops.in = ComplexMatrix::Identity(ops.n.dim(), ops.n.dim());
  return ops;
}

}  // namespace

ComplexMatrix lab_hamiltonian(const SpeciesConstants& c, const BiasField& f) {
  c.validate();
  f.validate();
  const Operators o = operators(c);
  const double bx = f.bx(), bz = f.bz();
  const ComplexMatrix sz2 = o.e.sz * o.e.sz;

  ComplexMatrix h = c.zero_field_mhz * tensor_product(sz2, o.in);
  h -= c.gamma_e_mhz_per_g * tensor_product((bz * o.e.sz + bx * o.e.sx).eval(), o.in);
  h -= c.gamma_n_mhz_per_g * tensor_product(o.ie, (bz * o.n.sz + bx * o.n.sx).eval());
  h += c.a_par_mhz * tensor_product(o.e.sz, o.n.sz);
  h += c.a_perp_mhz * (tensor_product(o.e.sx, o.n.sx) + tensor_product(o.e.sy, o.n.sy));
  if (c.quadrupole_mhz != 0) h += c.quadrupole_mhz * tensor_product(o.ie, (o.n.sz * o.n.sz).eval());
  return units::two_pi * h;
}

ComplexMatrix rotating_hamiltonian(const SpeciesConstants& c, const BiasField& f) {
  c.validate();
  f.validate();
  const Operators o = operators(c);
  const double k = kappa(c);
  const double gn = c.gamma_n_mhz_per_g;
  const double bx = f.bx(), bz = f.bz();
  const ComplexMatrix sz2 = o.e.sz * o.e.sz;

  ComplexMatrix h = c.a_par_mhz * tensor_product(o.e.sz, o.n.sz);
  h -= gn * bz * tensor_product(o.ie, o.n.sz);
  h -= (1 - 2 * k) * gn * bx * tensor_product(o.ie, o.n.sx);
  h -= 3 * k * gn * bx * tensor_product(sz2, o.n.sx);
  if (c.quadrupole_mhz != 0) h += c.quadrupole_mhz * tensor_product(o.ie, (o.n.sz * o.n.sz).eval());
  return units::two_pi * h;
}

Eigen::Index basis_index(const SpeciesConstants& c, int ms, double mi) {
  if (ms < -1 || ms > 1) throw std::invalid_argument("basis_index: m_s must be -1, 0 or +1");
  const Eigen::Index nd = c.nuclear_dim();
  const double n_idx = c.nuclear_spin - mi;
  if (n_idx < 0 || n_idx > static_cast<double>(nd - 1) || n_idx != std::floor(n_idx)) {
    throw std::invalid_argument("basis_index: invalid nuclear projection");
  }
  return static_cast<Eigen::Index>(1 - ms) * nd + static_cast<Eigen::Index>(n_idx);
}

Eigen::Vector2d EffectiveFieldDecomposition::total_field(int ms) const {
  return Eigen::Vector2d(0, beta_ind) + beta(ms);
}

EffectiveFieldDecomposition effective_field_decomposition(const SpeciesConstants& c, const BiasField& f) {
  c.validate();
  f.validate();
  EffectiveFieldDecomposition d;
  d.kappa = kappa(c);
  const double k = d.kappa;
  const double gn = c.gamma_n_mhz_per_g;
  const double bx = f.bx(), bz = f.bz();

  // Unprimed (x, z) components. The 14N quadrupole term acts as a pseudo-field
  // -Q/gamma_n along z.
  const Eigen::Vector2d ind((1 - 2 * k) * bx, bz - c.quadrupole_mhz / gn);
  d.beta_ind = ind.norm();
  Eigen::Vector2d zp(0, 1);
  if (d.beta_ind > 0) zp = ind / d.beta_ind;
  const Eigen::Vector2d xp(zp.y(), -zp.x());

  for (int ms = -1; ms <= 1; ++ms) {
    const double m = ms;
    const Eigen::Vector2d dep(3 * k * m * m * bx, -m * c.a_par_mhz / gn);
    Eigen::Vector2d primed(dep.dot(xp), dep.dot(zp));
    if (ms == 0) primed.setZero();
    d.beta_ms[ms + 1] = primed;
    d.phi_ms[ms + 1] = ms == 0 ? 0.0 : std::atan2(primed.x(), d.beta_ind + primed.y());
    d.omega_ms[ms + 1] = units::angular(std::abs(gn)) * d.total_field(ms).norm();
  }
  return d;
}

double relative_angle(const EffectiveFieldDecomposition& d, int i, int j) {
  if (i == j) throw std::invalid_argument("relative_angle: states must differ");
  const Eigen::Vector2d a = d.total_field(i), b = d.total_field(j);
  const double cross = a.x() * b.y() - a.y() * b.x();
  return std::atan2(std::abs(cross), a.dot(b));
}

double omega0(const SpeciesConstants& c, const BiasField& f) {
  if (c.quadrupole_mhz != 0) return effective_field_decomposition(c, f).omega(0);
  c.validate();
  f.validate();
  const double k = kappa(c);
  const double s = std::sin(f.theta_rad);
  return units::angular(std::abs(c.gamma_n_mhz_per_g)) * f.magnitude_g *
         std::sqrt(1 + 4 * (k * k - k) * s * s);
}

std::string constants_table(const SpeciesConstants& c) {
  std::ostringstream out;
  out << "# NV ground-state constants (frequencies in MHz, fields in G)\n";
  out << "species = " << to_string(c.species) << "\n";
  out << "nuclear_spin = " << format_shortest(c.nuclear_spin) << "\n";
  out << "D_mhz = " << format_shortest(c.zero_field_mhz) << "\n";
  out << "gamma_e_mhz_per_g = " << format_shortest(c.gamma_e_mhz_per_g) << "\n";
  out << "gamma_n_mhz_per_g = " << format_shortest(c.gamma_n_mhz_per_g) << "\n";
  out << "A_perp_mhz = " << format_shortest(c.a_perp_mhz) << "\n";
  out << "A_par_mhz = " << format_shortest(c.a_par_mhz) << "\n";
  out << "Q_mhz = " << format_shortest(c.quadrupole_mhz) << "\n";
  out << "kappa = " << format_shortest(kappa(c)) << "\n";
  if (c.species == Species::N14) out << "# 14N hyperfine values are configuration-dependent inputs\n";
  return out.str();
}

}  // namespace ereem
