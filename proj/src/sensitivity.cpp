#include "ereem/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ereem/parallel.hpp"
#include "ereem/units.hpp"

namespace ereem {

void SensitivityParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string("sensitivity: ") + what + " must be positive");
  };
  positive(contrast, "contrast");
  positive(photons, "photon number");
  positive(dead_time_us, "dead time");
  positive(t2_star_us, "T2*");
  positive(stretch, "stretch exponent");
  positive(gamma_e_mhz_per_g, "gamma_e");
}

namespace {

double decay(const SensitivityParams& sp, double tau) { return std::exp(-std::pow(tau / sp.t2_star_us, sp.stretch)); }

double prefactor(const SensitivityParams& sp) {
  return units::angular(sp.gamma_e_mhz_per_g) * sp.contrast * std::sqrt(sp.photons);
}

}  // namespace

double shot_noise_sensitivity(const SensitivityParams& sp, double tau) {
  sp.validate();
  if (!(tau > 0)) throw std::invalid_argument("sensitivity: tau must be positive");
  return std::sqrt(tau + sp.dead_time_us) / (tau * prefactor(sp) * decay(sp, tau));
}

double inverse_sensitivity(const SensitivityParams& sp, double tau) {
  sp.validate();
  if (tau < 0) throw std::invalid_argument("sensitivity: tau must be non-negative");
  return prefactor(sp) * decay(sp, tau) * tau / std::sqrt(tau + sp.dead_time_us);
}

WorkingPoint optimal_evolution_time(const SensitivityParams& sp, const EnvelopeFunction& chi) {
  sp.validate();
  auto objective = [&](double tau) { return inverse_sensitivity(sp, tau) * (chi ? chi(tau) : 1.0); };
  const double hi = 10 * sp.t2_star_us;
  constexpr std::size_t n = 20000;
  const double h = hi / n;
  std::size_t best = 1;
  double best_v = objective(h);
  for (std::size_t k = 2; k <= n; ++k) {
    const double v = objective(static_cast<double>(k) * h);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  double a = static_cast<double>(best - 1) * h;
  double b = std::min(hi, static_cast<double>(best + 1) * h);
  const double g = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && b - a > 1e-13 * hi; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = objective(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = objective(x1);
    }
  }
  WorkingPoint w;
  w.tau_us = 0.5 * (a + b);
  if (objective(w.tau_us) < best_v) w.tau_us = static_cast<double>(best) * h;
  w.inverse_eta = objective(w.tau_us);
  w.eta = shot_noise_sensitivity(sp, w.tau_us);
  const double d = std::max(1e-6 * w.tau_us, 1e-9);
  w.bracketed = w.tau_us + d < hi && objective(w.tau_us - d) <= w.inverse_eta && objective(w.tau_us + d) <= w.inverse_eta;
  return w;
}

double relative_inverse_sensitivity(const SensitivityParams& sp, double tau_opt, double chi, double tau) {
  sp.validate();
  if (!(tau_opt > 0)) throw std::invalid_argument("relative sensitivity: tau_opt must be positive");
  if (tau < 0) throw std::invalid_argument("relative sensitivity: tau must be non-negative");
  const double td = sp.dead_time_us;
  const double p = sp.stretch;
  return chi * (tau / tau_opt) * std::sqrt((tau_opt + td) / (tau + td)) *
         std::exp(std::pow(tau_opt / sp.t2_star_us, p) - std::pow(tau / sp.t2_star_us, p));
}

double relative_inverse_sensitivity(const SensitivityParams& sp, double tau_opt, const EffectiveFieldDecomposition& d,
                                    Protocol p, double tau) {
  return relative_inverse_sensitivity(sp, tau_opt, envelope(d, p, tau), tau);
}

SensitivityGrid chi_min_map(const SpeciesConstants& c, Protocol p, const std::vector<double>& field_g,
                            const std::vector<double>& theta_rad, unsigned threads) {
  if (field_g.size() < 2 || theta_rad.size() < 2) throw std::invalid_argument("chi_min map: need >= 2 points per axis");
  SensitivityGrid g;
  g.quantity = "chi_min";
  g.rows = {"theta", "deg", {}};
  for (double t : theta_rad) g.rows.values.push_back(units::degrees(t));
  g.cols = {"B", "G", field_g};
  g.values.resize(static_cast<Eigen::Index>(theta_rad.size()), static_cast<Eigen::Index>(field_g.size()));
  parallel_for(theta_rad.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < field_g.size(); ++j) {
      const BiasField f{field_g[j], theta_rad[i]};
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          envelope_properties(effective_field_decomposition(c, f), p).chi_min;
    }
  });
  return g;
}

SensitivityGrid relative_sensitivity_map(const SpeciesConstants& c, const SensitivityParams& sp, Protocol p,
                                         double theta_rad, const std::vector<double>& field_g,
                                         const std::vector<double>& tau_us, unsigned threads) {
  if (field_g.size() < 2 || tau_us.size() < 2) throw std::invalid_argument("sensitivity map: need >= 2 points per axis");
  const double tau_opt = optimal_evolution_time(sp).tau_us;
  SensitivityGrid g;
  g.quantity = "eta_opt_over_eta_tilde";
  g.rows = {"B", "G", field_g};
  g.cols = {"tau", "us", tau_us};
  g.values.resize(static_cast<Eigen::Index>(field_g.size()), static_cast<Eigen::Index>(tau_us.size()));
  parallel_for(field_g.size(), threads, [&](std::size_t i) {
    const auto d = effective_field_decomposition(c, BiasField{field_g[i], theta_rad});
    for (std::size_t j = 0; j < tau_us.size(); ++j) {
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          relative_inverse_sensitivity(sp, tau_opt, d, p, tau_us[j]);
    }
  });
  g.annotations = {{"tau_opt_us", tau_opt}, {"theta_deg", units::degrees(theta_rad)}};
  return g;
}

RelativeSensitivityCurve relative_sensitivity_curve(const SpeciesConstants& c, const SensitivityParams& sp,
                                                    Protocol p, const BiasField& f, const std::vector<double>& tau_us) {
  const auto d = effective_field_decomposition(c, f);
  RelativeSensitivityCurve r;
  r.tau_us = tau_us;
  r.tau_opt_us = optimal_evolution_time(sp).tau_us;
  for (double t : tau_us) {
    r.chi.push_back(envelope(d, p, t));
    r.ratio.push_back(relative_inverse_sensitivity(sp, r.tau_opt_us, r.chi.back(), t));
  }
  r.adjusted = optimal_evolution_time(sp, [&](double t) { return envelope(d, p, t); });
  r.adjusted_ratio = relative_inverse_sensitivity(sp, r.tau_opt_us, envelope(d, p, r.adjusted.tau_us), r.adjusted.tau_us);
  return r;
}

std::vector<double> GridDefaults::tau(const SensitivityParams& sp) {
  const double hi = 4 * sp.t2_star_us;
  std::vector<double> v(2000);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = hi * static_cast<double>(k + 1) / 2000.0;
  return v;
}

std::vector<double> GridDefaults::field() {
  std::vector<double> v(200);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k + 1);
  return v;
}

std::vector<double> GridDefaults::theta() {
  std::vector<double> v = linear_grid(0, 45, 90);
  for (double& t : v) t = units::radians(t);
  return v;
}

}  // namespace ereem
