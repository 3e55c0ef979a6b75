#include "ereem/ramsey.hpp"

#include <cmath>
#include <random>
#include <limits>
#include <stdexcept>

#include "ereem/units.hpp"

namespace ereem {

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::SqPlus: return "sq+";
    case Protocol::SqMinus: return "sq-";
    case Protocol::Dq: return "dq";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "sq+" || name == "sq" || name == "SQ" || name == "SQ+") return Protocol::SqPlus;
  if (name == "sq-" || name == "SQ-") return Protocol::SqMinus;
  if (name == "dq" || name == "DQ") return Protocol::Dq;
  throw std::invalid_argument("unknown protocol '" + name + "' (expected sq+, sq- or dq)");
}

StatePair state_pair(Protocol p, const EffectiveFieldDecomposition& d) {
  switch (p) {
    case Protocol::SqPlus: return {0, +1};
    case Protocol::SqMinus: return {0, -1};
    case Protocol::Dq: return d.omega(-1) <= d.omega(+1) ? StatePair{-1, +1} : StatePair{+1, -1};
  }
  return {0, +1};
}

// The sign of the cos(Phi) term follows from Re Tr(U_i^dag U_j)/2 with both
// nuclear precessions taken about their effective fields in the same sense,
// which puts the aligned-field fringe at (w_j - w_i)/2.
double sq_signal(const EffectiveFieldDecomposition& d, double tau_us, bool upper) {
  const int ms = upper ? +1 : -1;
  const double a = d.omega(0) * tau_us / 2;
  const double b = d.omega(ms) * tau_us / 2;
  const double c = std::cos(relative_angle(d, 0, ms));
  return 0.5 * (1 - std::cos(a) * std::cos(b) - c * std::sin(a) * std::sin(b));
}

double dq_signal(const EffectiveFieldDecomposition& d, double tau_us) {
  const double a = d.omega(-1) * tau_us / 2;
  const double b = d.omega(+1) * tau_us / 2;
  const double c = std::cos(relative_angle(d, -1, +1));
  return 0.5 * (1 + std::cos(a) * std::cos(b) + c * std::sin(a) * std::sin(b));
}

double ramsey_signal(const EffectiveFieldDecomposition& d, Protocol p, double tau_us) {
  switch (p) {
    case Protocol::SqPlus: return sq_signal(d, tau_us, true);
    case Protocol::SqMinus: return sq_signal(d, tau_us, false);
    case Protocol::Dq: return dq_signal(d, tau_us);
  }
  return 0;
}

EnvelopeProperties envelope_properties(const EffectiveFieldDecomposition& d, Protocol p) {
  const StatePair s = state_pair(p, d);
  EnvelopeProperties e;
  e.beat_omega = d.omega(s.slow);
  e.chi_min = std::abs(std::cos(relative_angle(d, s.slow, s.fast)));
  e.chi_max = 1;
  e.period_us = e.beat_omega > 0 ? units::two_pi / e.beat_omega : std::numeric_limits<double>::infinity();
  return e;
}

double envelope(const EffectiveFieldDecomposition& d, Protocol p, double tau_us) {
  const StatePair s = state_pair(p, d);
  const double c = std::cos(relative_angle(d, s.slow, s.fast));
  const double a = d.omega(s.slow) * tau_us / 2;
  const double ca = std::cos(a), sa = std::sin(a);
  return std::sqrt(ca * ca + c * c * sa * sa);
}

// ---------------------------------------------------------------------------
// Fit models

Eigen::VectorXd EreemFitParams::to_vector() const {
  Eigen::VectorXd v(count);
  v << c0, t2_star_us, stretch, omega0, omega_p1, phi, x0, x_p1, offset;
  return v;
}

EreemFitParams EreemFitParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(count)) throw std::invalid_argument("EreemFitParams: expected 9 values");
  return EreemFitParams{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

const std::array<std::string, EreemFitParams::count>& EreemFitParams::names() {
  static const std::array<std::string, count> n{"C0", "T2_star_us", "p", "omega0", "omega_p1",
                                                "Phi", "x0", "x_p1", "y0"};
  return n;
}

void EreemFitParams::validate() const {
  if (!(c0 > 0)) throw std::invalid_argument("EREEM parameters: C0 must be positive");
  if (!(t2_star_us > 0)) throw std::invalid_argument("EREEM parameters: T2* must be positive");
  if (!(stretch > 0)) throw std::invalid_argument("EREEM parameters: stretch exponent must be positive");
  if (!(omega0 < omega_p1)) throw std::invalid_argument("EREEM parameters: omega0 must be below omega_p1");
}

namespace {

struct Decay {
  double value = 1;
  double d_t2 = 0;
  double d_stretch = 0;
};

Decay decay(double tau, double t2, double p) {
  if (std::isinf(t2) || tau == 0) return {};
  const double r = tau / t2;
  const double u = std::pow(r, p);
  const double e = std::exp(-u);
  return {e, e * p * u / t2, -e * u * std::log(r)};
}

}  // namespace

double ereem_fit_model(const EreemFitParams& p, double tau) {
  const double a = p.omega0 * tau / 2 + p.x0;
  const double b = p.omega_p1 * tau / 2 + p.x_p1;
  const double g = -std::cos(a) * std::cos(b) - std::cos(p.phi) * std::sin(a) * std::sin(b);
  return p.c0 * decay(tau, p.t2_star_us, p.stretch).value * g + p.offset;
}

void ereem_fit_gradient(const EreemFitParams& p, double tau, Eigen::Ref<Eigen::VectorXd> grad) {
  const double a = p.omega0 * tau / 2 + p.x0;
  const double b = p.omega_p1 * tau / 2 + p.x_p1;
  const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
  const double c = std::cos(p.phi);
  const double g = -ca * cb - c * sa * sb;
  const double dg_da = sa * cb - c * ca * sb;
  const double dg_db = ca * sb - c * sa * cb;
  const Decay dec = decay(tau, p.t2_star_us, p.stretch);
  const double amp = p.c0 * dec.value;

  grad[EreemFitParams::C0] = dec.value * g;
  grad[EreemFitParams::T2Star] = p.c0 * g * dec.d_t2;
  grad[EreemFitParams::Stretch] = p.c0 * g * dec.d_stretch;
  grad[EreemFitParams::Omega0] = amp * dg_da * tau / 2;
  grad[EreemFitParams::OmegaP1] = amp * dg_db * tau / 2;
  grad[EreemFitParams::Phi] = amp * std::sin(p.phi) * sa * sb;
  grad[EreemFitParams::X0] = amp * dg_da;
  grad[EreemFitParams::XP1] = amp * dg_db;
  grad[EreemFitParams::Offset] = 1;
}

std::array<double, 4> FourToneParams::tone_frequencies() const {
  const double a = std::abs(delta_a), b = std::abs(delta_b), h = omega0 / 2;
  return {a - h, a + h, b - h, b + h};
}

Eigen::VectorXd FourToneParams::to_vector() const {
  Eigen::VectorXd v(count);
  v << delta_a, delta_b, omega0, amplitude[0], amplitude[1], amplitude[2], amplitude[3], phase[0], phase[1],
      phase[2], phase[3], t2_star_us, stretch, offset;
  return v;
}

FourToneParams FourToneParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(count)) throw std::invalid_argument("FourToneParams: expected 14 values");
  FourToneParams p;
  p.delta_a = v[DeltaA];
  p.delta_b = v[DeltaB];
  p.omega0 = v[Omega0];
  for (int k = 0; k < 4; ++k) {
    p.amplitude[k] = v[Amp1 + k];
    p.phase[k] = v[Phase1 + k];
  }
  p.t2_star_us = v[T2Star];
  p.stretch = v[Stretch];
  p.offset = v[Offset];
  return p;
}

const std::array<std::string, FourToneParams::count>& FourToneParams::names() {
  static const std::array<std::string, count> n{"delta_a", "delta_b", "omega0", "A1", "A2", "A3", "A4", "psi1",
                                                "psi2", "psi3", "psi4", "T2_star_us", "p", "y0"};
  return n;
}

bool four_tone_resolvable(double delta_a, double delta_b, double omega0) {
  return std::abs(std::abs(delta_a) - std::abs(delta_b)) >= kFourToneResolvability * std::abs(omega0);
}

double four_tone_model(const FourToneParams& p, double tau) {
  const auto w = p.tone_frequencies();
  double sum = 0;
  for (int k = 0; k < 4; ++k) sum += p.amplitude[k] * std::cos(w[k] * tau + p.phase[k]);
  return decay(tau, p.t2_star_us, p.stretch).value * sum + p.offset;
}

void four_tone_gradient(const FourToneParams& p, double tau, Eigen::Ref<Eigen::VectorXd> grad) {
  const auto w = p.tone_frequencies();
  const Decay dec = decay(tau, p.t2_star_us, p.stretch);
  const double sign_a = p.delta_a < 0 ? -1.0 : 1.0;
  const double sign_b = p.delta_b < 0 ? -1.0 : 1.0;
  std::array<double, 4> cs{}, sn{};
  double sum = 0;
  for (int k = 0; k < 4; ++k) {
    cs[k] = std::cos(w[k] * tau + p.phase[k]);
    sn[k] = std::sin(w[k] * tau + p.phase[k]);
    sum += p.amplitude[k] * cs[k];
  }
  const double e = dec.value;
  grad.setZero();
  grad[FourToneParams::DeltaA] = -e * tau * sign_a * (p.amplitude[0] * sn[0] + p.amplitude[1] * sn[1]);
  grad[FourToneParams::DeltaB] = -e * tau * sign_b * (p.amplitude[2] * sn[2] + p.amplitude[3] * sn[3]);
  grad[FourToneParams::Omega0] = e * tau / 2 *
                                 (p.amplitude[0] * sn[0] - p.amplitude[1] * sn[1] + p.amplitude[2] * sn[2] -
                                  p.amplitude[3] * sn[3]);
  for (int k = 0; k < 4; ++k) {
    grad[FourToneParams::Amp1 + k] = e * cs[k];
    grad[FourToneParams::Phase1 + k] = -e * p.amplitude[k] * sn[k];
  }
  grad[FourToneParams::T2Star] = dec.d_t2 * sum;
  grad[FourToneParams::Stretch] = dec.d_stretch * sum;
  grad[FourToneParams::Offset] = 1;
}

// ---------------------------------------------------------------------------

void RamseyTrace::validate() const {
  if (tau_us.size() != signal.size()) throw std::invalid_argument("trace: tau and signal lengths differ");
  if (tau_us.size() < 2) throw std::invalid_argument("trace: need at least two samples");
  for (std::size_t i = 1; i < tau_us.size(); ++i) {
    if (!(tau_us[i] > tau_us[i - 1])) throw std::invalid_argument("trace: tau grid must be strictly increasing");
  }
  for (double v : signal) {
    if (!std::isfinite(v)) throw std::invalid_argument("trace: non-finite signal value");
  }
}

std::vector<double> linear_grid(double start, double stop, std::size_t points) {
  if (points < 2) throw std::invalid_argument("linear_grid: need at least two points");
  std::vector<double> g(points);
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = start + step * static_cast<double>(i);
  g.back() = stop;
  return g;
}

RamseyTrace analytic_trace(const SpeciesConstants& c, const BiasField& f, Protocol p,
                           const std::vector<double>& tau_us) {
  const auto d = effective_field_decomposition(c, f);
  RamseyTrace t;
  t.tau_us = tau_us;
  t.signal.reserve(tau_us.size());
  for (double tau : tau_us) {
    if (tau < 0) throw std::invalid_argument("analytic_trace: negative free evolution time");
    t.signal.push_back(ramsey_signal(d, p, tau));
  }
  t.meta.constants = c;
  t.meta.field = f;
  t.meta.protocol = p;
  t.meta.source = "analytic";
  t.meta.initial_state = "unpolarized";
  return t;
}

RamseyTrace degrade_trace(const RamseyTrace& clean, double t2_star_us, double stretch, double noise_sigma,
                          std::uint64_t seed) {
  clean.validate();
  if (!(t2_star_us > 0) || !(stretch > 0) || noise_sigma < 0) {
    throw std::invalid_argument("degrade_trace: T2* and p must be positive, sigma non-negative");
  }
  RamseyTrace t = clean;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::isfinite(t2_star_us)) {
      t.signal[i] = 0.5 + (t.signal[i] - 0.5) * std::exp(-std::pow(t.tau_us[i] / t2_star_us, stretch));
    }
    if (noise_sigma > 0) t.signal[i] += noise_sigma * gauss(rng);
  }
  return t;
}

}  // namespace ereem
