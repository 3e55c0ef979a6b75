#pragma once

// Photon-shot-noise Ramsey sensitivity, EREEM-adjusted working points, and
// chi_min / relative-sensitivity maps with contour extraction.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ereem/nv_model.hpp"
#include "ereem/ramsey.hpp"

namespace ereem {

struct SensitivityParams {
  double contrast = 1;
  double photons = 1;  // per measurement
  double dead_time_us = 5;
  double t2_star_us = 5;
  double stretch = 1;
  double gamma_e_mhz_per_g = 2.8024;  // magnitude

  void validate() const;
};

/// eta = 1 / (gamma_e C exp(-(tau/T2*)^p) sqrt(N)) * sqrt(tau + T_D) / tau,
/// with gamma_e angular, so eta is in G sqrt(us).
double shot_noise_sensitivity(const SensitivityParams& sp, double tau_us);
/// 1 / eta, continuous at tau = 0 where it vanishes.
double inverse_sensitivity(const SensitivityParams& sp, double tau_us);

using EnvelopeFunction = std::function<double(double tau_us)>;

struct WorkingPoint {
  double tau_us = 0;
  double eta = 0;
  double inverse_eta = 0;  // includes chi when an envelope was supplied
  // the discrete derivative of the objective changes sign across tau_us
  bool bracketed = false;
};

/// Maximizer of chi(tau) / eta(tau) over (0, 10 T2*]; chi defaults to 1.
WorkingPoint optimal_evolution_time(const SensitivityParams& sp, const EnvelopeFunction& chi = {});

/// eta_opt / eta_tilde for a given envelope value chi at tau:
/// chi (tau / tau_opt) sqrt((tau_opt + T_D) / (tau + T_D)) exp((tau_opt/T2*)^p - (tau/T2*)^p).
double relative_inverse_sensitivity(const SensitivityParams& sp, double tau_opt_us, double chi, double tau_us);
double relative_inverse_sensitivity(const SensitivityParams& sp, double tau_opt_us,
                                    const EffectiveFieldDecomposition& d, Protocol p, double tau_us);

struct GridAxis {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

/// values(i, j) belongs to (rows.values[i], cols.values[j]).
struct SensitivityGrid {
  std::string quantity;
  GridAxis rows;
  GridAxis cols;
  Eigen::MatrixXd values;
  std::vector<std::pair<std::string, double>> annotations;
};

SensitivityGrid chi_min_map(const SpeciesConstants& c, Protocol p, const std::vector<double>& field_g,
                            const std::vector<double>& theta_rad, unsigned threads = 0);

/// Relative inverse sensitivity over (B, tau) at one misalignment angle.
SensitivityGrid relative_sensitivity_map(const SpeciesConstants& c, const SensitivityParams& sp, Protocol p,
                                         double theta_rad, const std::vector<double>& field_g,
                                         const std::vector<double>& tau_us, unsigned threads = 0);

struct RelativeSensitivityCurve {
  std::vector<double> tau_us;
  std::vector<double> chi;
  std::vector<double> ratio;
  double tau_opt_us = 0;        // unmodulated
  WorkingPoint adjusted;        // with the envelope
  double adjusted_ratio = 0;    // eta_opt / eta_tilde_opt
};

RelativeSensitivityCurve relative_sensitivity_curve(const SpeciesConstants& c, const SensitivityParams& sp,
                                                    Protocol p, const BiasField& f, const std::vector<double>& tau_us);

struct GridDefaults {
  static std::vector<double> tau(const SensitivityParams& sp);  // (0, 4 T2*], 2000 points
  static std::vector<double> field();                           // (0, 200] G, 200 points
  static std::vector<double> theta();                           // [0, 45] deg as rad, 90 points
};

// ---------------------------------------------------------------------------
// Contours

struct ContourLine {
  double level = 0;
  std::vector<Eigen::Vector2d> points;  // (col value, row value)
  bool closed = false;
};

/// Marching squares on a rectilinear grid; saddle cells are split by the
/// cell-centre average.
std::vector<ContourLine> extract_contours(const SensitivityGrid& grid, double level);

}  // namespace ereem
