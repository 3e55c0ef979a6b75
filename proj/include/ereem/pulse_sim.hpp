#pragma once

// Lab-frame simulation of SQ/DQ Ramsey sequences with an explicit microwave
// drive, and the fit-based comparison against the vector model.

#include <string>
#include <vector>

#include "ereem/fitting.hpp"
#include "ereem/nv_model.hpp"
#include "ereem/ramsey.hpp"

namespace ereem {

struct PulseSpec {
  double rabi_mhz = 20;
  double carrier_mhz = 0;         // 0: mean hyperfine transition frequency of the driven manifold
  double carrier_offset_mhz = 0;  // added to the carrier, for purposely detuned runs
  double phase_rad = 0;
  double duration_us = 0;  // 0: calibrate
  int steps_per_period = 64;

  void validate() const;
};

struct ManifoldTransitions {
  int ms = 1;
  std::vector<double> frequencies_mhz;  // |0, m_I> <-> |ms, m_I>, m_I descending
  double mean_mhz = 0;
  double min_nuclear_overlap = 1;
  bool nuclear_labels_ambiguous() const { return min_nuclear_overlap < 0.5; }
};

struct TransitionFrequencies {
  ManifoldTransitions plus;
  ManifoldTransitions minus;
  const ManifoldTransitions& manifold(int ms) const { return ms > 0 ? plus : minus; }
};

/// Transition frequencies from exact diagonalization of the lab Hamiltonian.
/// Eigenstates are matched to |m_s, m_I> labels by maximal overlap; an
/// electronic weight below 1/2 raises NumericalError.
TransitionFrequencies transition_frequencies(const SpeciesConstants& c, const BiasField& f);

/// Ideal pulse length for the protocol: 1 / (4 rabi) for SQ, where the drive
/// is a single tone, and 1 / (2 sqrt2 rabi) for the two-tone DQ pulse.
double nominal_pulse_duration(const PulseSpec& spec, Protocol p);

/// Pulse duration giving half population transfer out of m_s = 0 (SQ) or
/// full transfer into the m_s = +-1 superposition (DQ) for the full system.
double calibrate_pulse_duration(const SpeciesConstants& c, const BiasField& f, const PulseSpec& spec, Protocol p,
                                const std::string& initial_state = "0,-1/2");

struct SimulationOptions {
  PulseSpec pulse;
  std::string initial_state = "0,-1/2";  // "0,<m_I>" or "unpolarized"
  unsigned threads = 0;
};

/// 512 points over three envelope beat periods, capped at 50 us.
std::vector<double> default_tau_grid(const SpeciesConstants& c, const BiasField& f, Protocol p,
                                     std::size_t points = 512);

RamseyTrace simulate_ramsey_trace(const SpeciesConstants& c, const BiasField& f, Protocol p,
                                  const std::vector<double>& tau_us, const SimulationOptions& options = {});

/// Full pulse - free evolution - pulse propagator at one tau, for diagnostics.
ComplexMatrix ramsey_sequence_propagator(const SpeciesConstants& c, const BiasField& f, Protocol p, double tau_us,
                                         const SimulationOptions& options = {});

struct CrosscheckResult {
  Protocol protocol = Protocol::SqPlus;
  bool beat_resolved = true;
  // rad/us; "fast" is omega_{+1}, omega_{-1} or the faster DQ state
  double omega0_sim = 0, omega0_analytic = 0, omega0_deviation_pct = 0;
  double omega_fast_sim = 0, omega_fast_analytic = 0, omega_fast_deviation_pct = 0;
  double phi_sim = 0, phi_se = 0, phi_analytic = 0;
  double chi_min_sim = 0, chi_min_analytic = 0, chi_min_deviation_pct = 0;
  EreemFitResult fit;
};

/// Fits the two-tone model (decay disabled) to a simulated trace and compares
/// against the vector-model predictions for the trace's own configuration.
CrosscheckResult crosscheck_envelope(const RamseyTrace& trace);

}  // namespace ereem
