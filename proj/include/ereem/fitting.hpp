#pragma once

// Damped Gauss-Newton least squares and the trace/spectrum fit pipelines.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ereem/nv_model.hpp"
#include "ereem/ramsey.hpp"

namespace ereem {

/// y = value(p, x); gradient fills d y / d p. A missing gradient falls back
/// to central finite differences.
struct CurveModel {
  std::size_t parameter_count = 0;
  std::function<double(const Eigen::VectorXd&, double)> value;
  std::function<void(const Eigen::VectorXd&, double, Eigen::Ref<Eigen::VectorXd>)> gradient;
  std::vector<std::string> names;
};

struct LeastSquaresOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
  std::optional<Eigen::VectorXd> lower;
  std::optional<Eigen::VectorXd> upper;
  std::vector<bool> fixed;  // empty or one flag per parameter
};

enum class FitStatus { Converged, MaxIterations, Singular, NonFinite };
std::string to_string(FitStatus s);

struct FitResult {
  Eigen::VectorXd params;
  Eigen::VectorXd std_errors;  // zero for fixed parameters
  Eigen::MatrixXd covariance;
  std::vector<std::string> names;
  std::vector<bool> fixed;
  double cost = 0;  // 0.5 * sum r^2
  double residual_norm = 0;
  double residual_variance = 0;  // sum r^2 / (n - free parameters)
  double condition_number = 0;   // of the free-parameter Jacobian
  FitStatus status = FitStatus::NonFinite;
  int iterations = 0;
  std::size_t observations = 0;

  bool converged() const { return status == FitStatus::Converged; }
};

FitResult least_squares_fit(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                            const Eigen::VectorXd& initial, const LeastSquaresOptions& options = {});

/// Two-sided standard-normal quantile for the given confidence, e.g. 1.96 for 0.95.
double normal_two_sided_z(double confidence);
/// Inverse standard-normal CDF.
double normal_quantile(double p);

CurveModel sine_model();  // [y0, A, omega, phase]: y0 + A sin(omega x + phase)
CurveModel ereem_curve_model();
CurveModel four_tone_curve_model();
CurveModel double_lorentzian_model();  // [A, C1, G1, nu1, C2, G2, nu2]

// ---------------------------------------------------------------------------
// ODMR

struct OdmrFit {
  FitResult fit;
  double offset = 0;
  std::array<double, 2> contrast{};
  std::array<double, 2> width_mhz{};  // FWHM
  std::array<double, 2> center_mhz{};
  std::array<double, 2> center_se_mhz{};
  double nu_star_mhz = 0;
  double nu_star_se_mhz = 0;
};

/// A - sum C_i / pi * (G_i/2) / ((nu - nu_i)^2 + (G_i/2)^2); C_i is the integrated dip area.
double double_lorentzian(double offset, const std::array<double, 2>& contrast, const std::array<double, 2>& width,
                         const std::array<double, 2>& center, double nu_mhz);

/// Throws NumericalError when the data show only one line or the fit fails.
OdmrFit fit_double_lorentzian(std::span<const double> frequency_mhz, std::span<const double> signal);

// ---------------------------------------------------------------------------
// EREEM two-tone and four-tone fits

struct EreemFitOptions {
  std::optional<EreemFitParams> initial;
  bool fit_decay = true;  // false: T2* infinite and p fixed
  std::array<bool, EreemFitParams::count> fixed{};
  LeastSquaresOptions solver;
};

struct EreemFitResult {
  FitResult fit;
  EreemFitParams params;
  EreemFitParams std_errors;
  double chi_min = 0;
  double chi_min_se = 0;
  double omega0_mhz = 0;
  double omega0_mhz_se = 0;
};

/// Two cosines y0 + sum_k A_k e(tau) cos(2 pi f_k tau + psi_k), f_lo < f_hi,
/// with e(tau) = exp(-tau / T2*) when decay is estimated and 1 otherwise.
struct TonePair {
  double f_lo_mhz = 0, f_hi_mhz = 0;
  double a_lo = 0, a_hi = 0;
  double psi_lo = 0, psi_hi = 0;
  double offset = 0;
  double t2_star_us = std::numeric_limits<double>::infinity();
  double stretch = 1;
  double rss = 0;
};

/// Periodogram peaks refined by a profiled linear fit over candidate pairs.
/// The grid must be uniform. Peaks above max_frequency_mhz are ignored.
TonePair estimate_tone_pair(std::span<const double> tau_us, std::span<const double> signal, bool fit_decay,
                            double max_frequency_mhz = std::numeric_limits<double>::infinity());
EreemFitParams ereem_params_from_tones(const TonePair& t);

/// Starting point from the periodogram and a profiled two-tone linear fit.
EreemFitParams initial_ereem_guess(std::span<const double> tau_us, std::span<const double> signal, bool fit_decay);

/// Throws NumericalError on non-convergence or a degenerate frequency pair.
EreemFitResult fit_ereem_trace(const RamseyTrace& trace, const EreemFitOptions& options = {});

struct FourToneFitResult {
  FitResult fit;
  FourToneParams params;
  FourToneParams std_errors;
  double omega0_mhz = 0;
  double omega0_mhz_se = 0;
};

/// Detunings and the omega0 guess in rad/us. Refuses unresolvable detunings
/// with std::invalid_argument.
FourToneFitResult fit_four_tone(const RamseyTrace& trace, double delta_a, double delta_b, double omega0_guess,
                                bool fit_decay = true);

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double confidence = 0.95;
  static constexpr std::size_t min_reportable = 1000;
  static constexpr double max_failure_fraction = 0.05;
};

struct BootstrapResult {
  std::size_t resamples = 0;
  std::size_t failures = 0;
  std::vector<std::string> names;
  Eigen::MatrixXd estimates;  // successful resamples x parameters, resample order
  Eigen::VectorXd point, std_error;
  Eigen::VectorXd percentile_lo, percentile_hi;
  Eigen::VectorXd standard_lo, standard_hi;
  Eigen::VectorXd normality_fraction;  // share of estimates inside the standard interval
  double z = 0;
  bool valid = false;

  bool reportable() const { return valid && resamples >= BootstrapOptions::min_reportable; }
};

/// Case resampling with replacement. Resample i draws indices from a
/// generator seeded by mix(seed, i) and refits from the base estimate.
BootstrapResult bootstrap_confidence(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                                     const FitResult& base, const LeastSquaresOptions& solver,
                                     const BootstrapOptions& options);

BootstrapResult bootstrap_ereem(const RamseyTrace& trace, const EreemFitResult& base, const BootstrapOptions& options,
                                const EreemFitOptions& fit_options = {});

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Transverse hyperfine refit

struct HyperfineRefit {
  FitResult fit;
  double a_perp_mhz = 0;
  double a_perp_se_mhz = 0;
  double ci_lo_mhz = 0;
  double ci_hi_mhz = 0;
};

/// Least-squares A_perp from omega0 (rad/us) measured at one field magnitude
/// and at least three angles, with kappa recomputed for each candidate.
HyperfineRefit refit_transverse_hyperfine(double magnitude_g, std::span<const double> theta_rad,
                                          std::span<const double> omega0, const SpeciesConstants& c);

/// Closed-form A_perp (MHz) reproducing one omega0 (rad/us) measurement.
double transverse_hyperfine_from_omega0(double magnitude_g, double theta_rad, double omega0,
                                        const SpeciesConstants& c);

}  // namespace ereem
