#include "ereem/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ereem/errors.hpp"
#include "ereem/parallel.hpp"
#include "ereem/pulse_sim.hpp"
#include "ereem/spectrum.hpp"
#include "ereem/units.hpp"

namespace ereem {

double delta_pm1(const SpeciesConstants& c, const BiasField& f, SplittingMethod method) {
  c.validate();
  f.validate();
  if (method == SplittingMethod::Approximate) {
    return 2 * std::abs(c.gamma_e_mhz_per_g) * f.magnitude_g * std::cos(f.theta_rad);
  }
  const TransitionFrequencies t = transition_frequencies(c, f);
  if (t.plus.nuclear_labels_ambiguous() || t.minus.nuclear_labels_ambiguous()) {
    throw NumericalError("delta_pm1: nuclear-spin labels are ambiguous at this field");
  }
  return std::abs(t.plus.mean_mhz - t.minus.mean_mhz);
}

FieldEstimate estimate_field(double aligned, double misaligned, const SpeciesConstants& c, double aligned_se,
                             double misaligned_se, bool angle_floor) {
  if (!(aligned > 0) || !std::isfinite(aligned)) throw std::invalid_argument("estimate_field: aligned splitting must be positive");
  if (!(misaligned >= 0) || !std::isfinite(misaligned)) {
    throw std::invalid_argument("estimate_field: misaligned splitting must be non-negative");
  }
  if (misaligned > aligned) {
    throw std::invalid_argument("estimate_field: misaligned splitting exceeds the aligned splitting");
  }
  if (aligned_se < 0 || misaligned_se < 0) throw std::invalid_argument("estimate_field: negative standard error");
  const double ge = std::abs(c.gamma_e_mhz_per_g);
  FieldEstimate e;
  e.aligned_splitting_mhz = aligned;
  e.misaligned_splitting_mhz = misaligned;
  e.magnitude_g = aligned / (2 * ge);
  e.magnitude_se_g = aligned_se / (2 * ge);
  const double r = misaligned / aligned;
  e.theta_rad = std::acos(r);
  const double sr = std::hypot(misaligned_se / aligned, r * aligned_se / aligned);
  double st = 0;
  if (sr > 0) {
    const double s = std::sqrt(std::max(0.0, 1 - r * r));
    st = s > 0 ? std::min(sr / s, std::sqrt(2 * sr)) : std::sqrt(2 * sr);
  }
  const double floor = units::radians(kStageAccuracyDeg);
  if (angle_floor && st < floor) {
    st = floor;
    e.angle_floor_applied = true;
  }
  e.theta_se_rad = st;
  return e;
}

ApproximationErrorScan approximation_error_scan(const SpeciesConstants& c, double magnitude_g,
                                                const std::vector<double>& theta, unsigned threads) {
  if (theta.empty()) throw std::invalid_argument("approximation_error_scan: empty angle grid");
  ApproximationErrorScan s;
  s.magnitude_g = magnitude_g;
  s.rows.resize(theta.size());
  parallel_for(theta.size(), threads, [&](std::size_t i) {
    const BiasField f{magnitude_g, theta[i]};
    ApproximationErrorRow& row = s.rows[i];
    row.theta_deg = units::degrees(theta[i]);
    row.approx_mhz = delta_pm1(c, f, SplittingMethod::Approximate);
    row.exact_mhz = delta_pm1(c, f, SplittingMethod::Exact);
    row.abs_deviation_mhz = std::abs(row.exact_mhz - row.approx_mhz);
    row.pct_deviation = row.exact_mhz > 0 ? 100 * row.abs_deviation_mhz / row.exact_mhz : 0;
  });
  for (const auto& r : s.rows) s.max_pct_deviation = std::max(s.max_pct_deviation, r.pct_deviation);
  return s;
}

namespace {

// y0 + A sin(omega nu + phase) over a uniform frequency grid
FitResult fit_fringe(std::span<const double> nu, std::span<const double> y) {
  const Periodogram pg = periodogram(nu, y, 8);
  const auto peaks = find_peaks(pg, 1);
  if (peaks.empty()) throw NumericalError("fringe fit: magnetometry curve shows no oscillation");
  const double omega = units::angular(peaks[0].frequency_mhz);
  // linear solve for the phase at the peak frequency
  Eigen::MatrixXd a(static_cast<Eigen::Index>(nu.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(nu.size()));
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 1;
    a(r, 1) = std::sin(omega * nu[i]);
    a(r, 2) = std::cos(omega * nu[i]);
    b[r] = y[i];
  }
  const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
  Eigen::VectorXd p0(4);
  p0 << s[0], std::hypot(s[1], s[2]), omega, std::atan2(s[2], s[1]);
  FitResult f = least_squares_fit(sine_model(), nu, y, p0);
  if (!f.converged()) throw NumericalError("fringe fit did not converge (" + to_string(f.status) + ")");
  return f;
}

}  // namespace

CenterCalibration mw_center_frequency(std::span<const double> odmr_nu, std::span<const double> odmr_y,
                                      std::span<const double> fringe_nu, std::span<const double> fringe_y) {
  if (fringe_nu.size() != fringe_y.size() || fringe_nu.size() < 16) {
    throw std::invalid_argument("mw_center_frequency: magnetometry curve needs >= 16 points");
  }
  CenterCalibration cal;
  cal.odmr = fit_double_lorentzian(odmr_nu, odmr_y);
  cal.nu_star_mhz = cal.odmr.nu_star_mhz;

  // fit in coordinates relative to nu* so the phase stays well conditioned
  std::vector<double> rel(fringe_nu.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = fringe_nu[i] - cal.nu_star_mhz;
  cal.fringe = fit_fringe(rel, fringe_y);
  const double omega = std::abs(cal.fringe.params[2]);
  double phase = cal.fringe.params[3];
  if (cal.fringe.params[2] < 0) phase = -phase + std::numbers::pi;
  cal.fringe_period_mhz = units::two_pi / omega;

  // extrema where omega x + phase = pi/2 + k pi
  const double k = std::round((phase - std::numbers::pi / 2) / std::numbers::pi);
  double best = std::numeric_limits<double>::infinity();
  for (double kk = k - 1; kk <= k + 1; kk += 1) {
    const double x = (std::numbers::pi / 2 + kk * std::numbers::pi - phase) / omega;
    if (std::abs(x) < std::abs(best)) best = x;
  }
  const double lo = rel.front(), hi = rel.back();
  if (!(std::abs(best) <= cal.fringe_period_mhz / 2) || best < lo || best > hi) {
    throw NumericalError("mw_center_frequency: no fringe extremum within half a fringe of nu*");
  }
  cal.correction_mhz = best;
  cal.nu_calibrated_mhz = cal.nu_star_mhz + best;
  for (int i = 0; i < 2; ++i) cal.detunings_mhz[i] = std::abs(cal.nu_calibrated_mhz - cal.odmr.center_mhz[i]);
  return cal;
}

std::vector<double> synthetic_odmr(const SyntheticDoublet& d, std::span<const double> nu) {
  std::mt19937_64 rng(d.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    y[i] = double_lorentzian(d.offset, d.contrast, d.width_mhz, d.center_mhz, nu[i]);
    if (d.noise > 0) y[i] += d.noise * noise(rng);
  }
  return y;
}

std::vector<double> synthetic_fringe(const SyntheticFringe& s, std::span<const double> nu) {
  if (!(s.splitting_mhz > 0)) throw std::invalid_argument("synthetic_fringe: splitting must be positive");
  const double tau = s.tau_us > 0 ? s.tau_us : 1.0 / s.splitting_mhz;
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(nu.size());
  const double lines[2] = {s.center_mhz - s.splitting_mhz / 2, s.center_mhz + s.splitting_mhz / 2};
  for (std::size_t i = 0; i < nu.size(); ++i) {
    double m = 0;
    for (double l : lines) m += 0.5 * std::cos(units::two_pi * (nu[i] - l) * tau);
    y[i] = s.offset - s.contrast / 2 * m;
    if (s.noise > 0) y[i] += s.noise * noise(rng);
  }
  return y;
}

}  // namespace ereem
