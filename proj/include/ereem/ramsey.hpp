#pragma once

// Closed-form single- and double-quantum Ramsey responses, envelope
// properties, and the parametric models fitted against measured traces.
//
// Signals are m_s = 0 populations in [0, 1]. The +-1-ranged form used in
// plots is signed_signal(population) = 2 * population - 1.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ereem/nv_model.hpp"

namespace ereem {

enum class Protocol { SqPlus, SqMinus, Dq };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

/// Electronic states whose coherence a protocol probes, ordered (i, j) with
/// i the state whose nuclear Larmor frequency sets the envelope beat.
struct StatePair {
  int slow;
  int fast;
};
StatePair state_pair(Protocol p, const EffectiveFieldDecomposition& d);

double sq_signal(const EffectiveFieldDecomposition& d, double tau_us, bool upper);
double dq_signal(const EffectiveFieldDecomposition& d, double tau_us);
double ramsey_signal(const EffectiveFieldDecomposition& d, Protocol p, double tau_us);

inline double signed_signal(double population) { return 2 * population - 1; }

struct EnvelopeProperties {
  double beat_omega = 0;  // rad/us
  double chi_min = 1;
  double chi_max = 1;
  double period_us = 0;  // 2 pi / beat_omega, infinite for an unmodulated signal
};

EnvelopeProperties envelope_properties(const EffectiveFieldDecomposition& d, Protocol p);

/// Instantaneous fringe amplitude chi(tau) of the two-tone Ramsey signal,
/// oscillating between |cos Phi| and 1.
double envelope(const EffectiveFieldDecomposition& d, Protocol p, double tau_us);

struct EreemFitParams {
  static constexpr std::size_t count = 9;
  enum Index : std::size_t { C0, T2Star, Stretch, Omega0, OmegaP1, Phi, X0, XP1, Offset };

  double c0 = 1;
  double t2_star_us = 5;
  double stretch = 1;
  double omega0 = 0;    // rad/us
  double omega_p1 = 0;  // rad/us
  double phi = 0;
  double x0 = 0;
  double x_p1 = 0;
  double offset = 0;

  Eigen::VectorXd to_vector() const;
  static EreemFitParams from_vector(const Eigen::VectorXd& v);
  static const std::array<std::string, count>& names();
  void validate() const;
};

/// C0 exp(-(tau/T2*)^p) [-cos(w0 tau/2 + x0) cos(w1 tau/2 + x1)
///                      - cos(Phi) sin(w0 tau/2 + x0) sin(w1 tau/2 + x1)] + offset
/// An infinite T2* disables the decay.
double ereem_fit_model(const EreemFitParams& p, double tau_us);
void ereem_fit_gradient(const EreemFitParams& p, double tau_us, Eigen::Ref<Eigen::VectorXd> grad);

struct FourToneParams {
  static constexpr std::size_t count = 14;
  enum Index : std::size_t { DeltaA, DeltaB, Omega0, Amp1, Amp2, Amp3, Amp4, Phase1, Phase2, Phase3, Phase4,
                             T2Star, Stretch, Offset };

  double delta_a = 0;  // rad/us
  double delta_b = 0;  // rad/us
  double omega0 = 0;   // rad/us
  std::array<double, 4> amplitude{};
  std::array<double, 4> phase{};
  double t2_star_us = 5;
  double stretch = 1;
  double offset = 0;

  // Tones ordered |delta_a| -+ w0/2, |delta_b| -+ w0/2.
  std::array<double, 4> tone_frequencies() const;
  Eigen::VectorXd to_vector() const;
  static FourToneParams from_vector(const Eigen::VectorXd& v);
  static const std::array<std::string, count>& names();
};

/// Minimum ratio ||delta_a| - |delta_b|| / w0 at which the four tones are
/// treated as resolved.
inline constexpr double kFourToneResolvability = 3.0;
bool four_tone_resolvable(double delta_a, double delta_b, double omega0);

double four_tone_model(const FourToneParams& p, double tau_us);
void four_tone_gradient(const FourToneParams& p, double tau_us, Eigen::Ref<Eigen::VectorXd> grad);

struct DriveSpec {
  double rabi_mhz = 0;
  double carrier_mhz = 0;
  double carrier_offset_mhz = 0;
  double phase_rad = 0;
  double pulse_duration_us = 0;
};

struct TraceMetadata {
  SpeciesConstants constants = SpeciesConstants::n15();
  BiasField field{};
  Protocol protocol = Protocol::SqPlus;
  std::string source = "analytic";  // analytic | pulse_sim | ingested
  std::string initial_state = "0,-1/2";
  std::optional<DriveSpec> drive;
};

struct RamseyTrace {
  std::vector<double> tau_us;
  std::vector<double> signal;
  TraceMetadata meta;

  std::size_t size() const { return tau_us.size(); }
  void validate() const;
};

std::vector<double> linear_grid(double start, double stop, std::size_t points);

RamseyTrace analytic_trace(const SpeciesConstants& c, const BiasField& f, Protocol p,
                           const std::vector<double>& tau_us);

/// Measurement-like copy of a clean trace: the deviation from 1/2 decays as
/// exp(-(tau/T2*)^p) and seeded Gaussian noise of the given sigma is added.
/// An infinite T2* or zero sigma skips the respective step.
RamseyTrace degrade_trace(const RamseyTrace& clean, double t2_star_us, double stretch, double noise_sigma,
                          std::uint64_t seed);

}  // namespace ereem
