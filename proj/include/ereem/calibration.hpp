#pragma once

// Bias-field estimation from ODMR splittings and the two-step microwave
// center-frequency calibration.

#include <cstdint>
#include <span>
#include <vector>

#include "ereem/fitting.hpp"
#include "ereem/nv_model.hpp"

namespace ereem {

/// Stage accuracy used as the lower bound on reported angle errors.
inline constexpr double kStageAccuracyDeg = 0.047;

enum class SplittingMethod { Approximate, Exact };

/// Delta_{+-1} in MHz: 2 |gamma_e| B cos(theta), or the difference between the
/// hyperfine-averaged 0 <-> +1 and 0 <-> -1 transitions of the full Hamiltonian.
double delta_pm1(const SpeciesConstants& c, const BiasField& f, SplittingMethod method);

struct FieldEstimate {
  double magnitude_g = 0;
  double magnitude_se_g = 0;
  double theta_rad = 0;
  double theta_se_rad = 0;
  double aligned_splitting_mhz = 0;
  double misaligned_splitting_mhz = 0;
  bool angle_floor_applied = false;
};

/// B = Delta_aligned / (2 |gamma_e|), theta = acos(Delta_mis / Delta_aligned),
/// first-order error propagation. Near theta = 0 the angle error uses the
/// second-order form sqrt(2 sigma_r) of the ratio error sigma_r.
FieldEstimate estimate_field(double aligned_mhz, double misaligned_mhz, const SpeciesConstants& c,
                             double aligned_se_mhz = 0, double misaligned_se_mhz = 0, bool angle_floor = true);

struct ApproximationErrorRow {
  double theta_deg = 0;
  double approx_mhz = 0;
  double exact_mhz = 0;
  double abs_deviation_mhz = 0;
  double pct_deviation = 0;
};

struct ApproximationErrorScan {
  double magnitude_g = 0;
  std::vector<ApproximationErrorRow> rows;
  double max_pct_deviation = 0;
};

ApproximationErrorScan approximation_error_scan(const SpeciesConstants& c, double magnitude_g,
                                                const std::vector<double>& theta_rad, unsigned threads = 0);

struct CenterCalibration {
  OdmrFit odmr;
  FitResult fringe;               // sine_model over microwave frequency
  double nu_star_mhz = 0;         // ODMR midpoint
  double nu_calibrated_mhz = 0;   // nearest fringe extremum
  double correction_mhz = 0;      // nu_calibrated - nu_star
  double fringe_period_mhz = 0;
  std::array<double, 2> detunings_mhz{};  // |nu_calibrated - nu_i| per hyperfine line
};

/// Step 1: nu* from the double-Lorentzian fit. Step 2: sinusoid fit of the
/// Ramsey magnetometry curve (signal vs microwave frequency at fixed tau) and
/// the extremum nearest nu*. Throws NumericalError when no extremum lies
/// within half a fringe of nu* inside the scanned range.
CenterCalibration mw_center_frequency(std::span<const double> odmr_frequency_mhz, std::span<const double> odmr_signal,
                                      std::span<const double> fringe_frequency_mhz,
                                      std::span<const double> fringe_signal);

struct SyntheticDoublet {
  double offset = 1;
  std::array<double, 2> contrast{0.02, 0.02};  // integrated areas, MHz
  std::array<double, 2> width_mhz{1.0, 1.0};
  std::array<double, 2> center_mhz{2617.985, 2621.015};
  double noise = 0;  // Gaussian sigma
  std::uint64_t seed = 0;
};

std::vector<double> synthetic_odmr(const SyntheticDoublet& d, std::span<const double> frequency_mhz);

struct SyntheticFringe {
  double center_mhz = 2619.5;    // true midpoint of the hyperfine pair
  double splitting_mhz = 3.03;  // hyperfine splitting
  double tau_us = 0;             // 0: one over the splitting, a contrast maximum
  double offset = 0.5;
  double contrast = 0.3;
  double noise = 0;
  std::uint64_t seed = 0;
};

/// offset - contrast/2 * mean_i cos(2 pi (nu - nu_i) tau) with nu_i the two lines.
std::vector<double> synthetic_fringe(const SyntheticFringe& s, std::span<const double> frequency_mhz);

}  // namespace ereem
