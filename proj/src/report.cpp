#include "ereem/report.hpp"

#include <cmath>

#include "ereem/format.hpp"
#include "ereem/units.hpp"

namespace ereem {

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json named(const std::vector<std::string>& names, const Eigen::VectorXd& v) {
  Json o = Json::object();
  for (std::size_t i = 0; i < names.size() && static_cast<Eigen::Index>(i) < v.size(); ++i) {
    o[names[i]] = num(v[static_cast<Eigen::Index>(i)]);
  }
  return o;
}

Json interval(double value, double se, double z) {
  return Json{{"value", num(value)}, {"se", num(se)}, {"lo", num(value - z * se)}, {"hi", num(value + z * se)}};
}

}  // namespace

Json to_json(const SpeciesConstants& c) {
  return Json{{"species", to_string(c.species)},
              {"nuclear_spin", c.nuclear_spin},
              {"D_MHz", c.zero_field_mhz},
              {"gamma_e_MHz_per_G", c.gamma_e_mhz_per_g},
              {"gamma_n_MHz_per_G", c.gamma_n_mhz_per_g},
              {"A_perp_MHz", c.a_perp_mhz},
              {"A_par_MHz", c.a_par_mhz},
              {"Q_MHz", c.quadrupole_mhz},
              {"kappa", kappa(c)}};
}

Json to_json(const BiasField& f) {
  return Json{{"B_G", f.magnitude_g},
              {"theta_deg", units::degrees(f.theta_rad)},
              {"Bx_G", f.bx()},
              {"Bz_G", f.bz()},
              {"beyond_perturbative_regime", f.beyond_perturbative_regime()}};
}

Json to_json(const FitResult& r) {
  Json fixed = Json::array();
  for (bool b : r.fixed) fixed.push_back(b);
  Json cov = Json::array();
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) cov.push_back(vec(r.covariance.row(i).transpose()));
  return Json{{"status", to_string(r.status)},
              {"converged", r.converged()},
              {"iterations", r.iterations},
              {"observations", r.observations},
              {"params", named(r.names, r.params)},
              {"std_errors", named(r.names, r.std_errors)},
              {"fixed", fixed},
              {"covariance", cov},
              {"cost", num(r.cost)},
              {"residual_norm", num(r.residual_norm)},
              {"residual_variance", num(r.residual_variance)},
              {"condition_number", num(r.condition_number)}};
}

Json to_json(const EreemFitResult& r, double confidence) {
  const double z = normal_two_sided_z(confidence);
  return Json{{"model", "ereem_two_tone"},
              {"confidence", confidence},
              {"z", z},
              {"omega0_MHz", interval(r.omega0_mhz, r.omega0_mhz_se, z)},
              {"omega_p1_MHz", interval(units::mhz(r.params.omega_p1), units::mhz(r.std_errors.omega_p1), z)},
              {"chi_min", interval(r.chi_min, r.chi_min_se, z)},
              {"Phi_rad", interval(r.params.phi, r.std_errors.phi, z)},
              {"fit", to_json(r.fit)}};
}

Json to_json(const FourToneFitResult& r, double confidence) {
  const double z = normal_two_sided_z(confidence);
  return Json{{"model", "ereem_four_tone"},
              {"confidence", confidence},
              {"z", z},
              {"omega0_MHz", interval(r.omega0_mhz, r.omega0_mhz_se, z)},
              {"delta_a_MHz", num(units::mhz(r.params.delta_a))},
              {"delta_b_MHz", num(units::mhz(r.params.delta_b))},
              {"fit", to_json(r.fit)}};
}

Json to_json(const BootstrapResult& r) {
  return Json{{"resamples", r.resamples},
              {"failures", r.failures},
              {"valid", r.valid},
              {"reportable", r.reportable()},
              {"z", r.z},
              {"point", named(r.names, r.point)},
              {"std_error", named(r.names, r.std_error)},
              {"percentile_lo", named(r.names, r.percentile_lo)},
              {"percentile_hi", named(r.names, r.percentile_hi)},
              {"standard_lo", named(r.names, r.standard_lo)},
              {"standard_hi", named(r.names, r.standard_hi)},
              {"normality_fraction", named(r.names, r.normality_fraction)}};
}

Json to_json(const OdmrFit& r) {
  return Json{{"offset", num(r.offset)},
              {"contrast", {num(r.contrast[0]), num(r.contrast[1])}},
              {"width_MHz", {num(r.width_mhz[0]), num(r.width_mhz[1])}},
              {"center_MHz", {num(r.center_mhz[0]), num(r.center_mhz[1])}},
              {"center_se_MHz", {num(r.center_se_mhz[0]), num(r.center_se_mhz[1])}},
              {"nu_star_MHz", num(r.nu_star_mhz)},
              {"nu_star_se_MHz", num(r.nu_star_se_mhz)},
              {"fit", to_json(r.fit)}};
}

Json to_json(const FieldEstimate& e) {
  return Json{{"B_G", num(e.magnitude_g)},
              {"B_se_G", num(e.magnitude_se_g)},
              {"theta_deg", num(units::degrees(e.theta_rad))},
              {"theta_se_deg", num(units::degrees(e.theta_se_rad))},
              {"aligned_splitting_MHz", e.aligned_splitting_mhz},
              {"misaligned_splitting_MHz", e.misaligned_splitting_mhz},
              {"angle_floor_applied", e.angle_floor_applied}};
}

Json to_json(const CenterCalibration& c) {
  return Json{{"nu_star_MHz", num(c.nu_star_mhz)},
              {"nu_calibrated_MHz", num(c.nu_calibrated_mhz)},
              {"correction_MHz", num(c.correction_mhz)},
              {"fringe_period_MHz", num(c.fringe_period_mhz)},
              {"detunings_MHz", {num(c.detunings_mhz[0]), num(c.detunings_mhz[1])}},
              {"odmr", to_json(c.odmr)},
              {"fringe_fit", to_json(c.fringe)}};
}

Json to_json(const CrosscheckResult& c) {
  return Json{{"protocol", to_string(c.protocol)},
              {"beat_resolved", c.beat_resolved},
              {"omega0_sim_MHz", num(units::mhz(c.omega0_sim))},
              {"omega0_analytic_MHz", num(units::mhz(c.omega0_analytic))},
              {"omega0_deviation_pct", num(c.omega0_deviation_pct)},
              {"omega_fast_sim_MHz", num(units::mhz(c.omega_fast_sim))},
              {"omega_fast_analytic_MHz", num(units::mhz(c.omega_fast_analytic))},
              {"omega_fast_deviation_pct", num(c.omega_fast_deviation_pct)},
              {"phi_sim_rad", num(c.phi_sim)},
              {"phi_se_rad", num(c.phi_se)},
              {"phi_analytic_rad", num(c.phi_analytic)},
              {"chi_min_sim", num(c.chi_min_sim)},
              {"chi_min_analytic", num(c.chi_min_analytic)},
              {"chi_min_deviation_pct", num(c.chi_min_deviation_pct)}};
}

Json to_json(const EffectiveFieldDecomposition& d) {
  Json states = Json::array();
  for (int ms = -1; ms <= 1; ++ms) {
    const Eigen::Vector2d t = d.total_field(ms);
    states.push_back(Json{{"ms", ms},
                          {"beta_x_G", d.beta(ms)[0]},
                          {"beta_z_G", d.beta(ms)[1]},
                          {"total_x_G", t[0]},
                          {"total_z_G", t[1]},
                          {"phi_rad", d.phi(ms)},
                          {"omega_MHz", units::mhz(d.omega(ms))}});
  }
  return Json{{"kappa", d.kappa}, {"beta_ind_G", d.beta_ind}, {"states", states}};
}

Json to_json(const WorkingPoint& w) {
  return Json{{"tau_us", num(w.tau_us)},
              {"eta", num(w.eta)},
              {"inverse_eta", num(w.inverse_eta)},
              {"bracketed", w.bracketed}};
}

Json envelope_summary(const SpeciesConstants& c, const BiasField& f, Protocol p) {
  const auto d = effective_field_decomposition(c, f);
  const auto e = envelope_properties(d, p);
  const auto s = state_pair(p, d);
  return Json{{"protocol", to_string(p)},
              {"field", to_json(f)},
              {"slow_state", s.slow},
              {"fast_state", s.fast},
              {"omega0_MHz", units::mhz(omega0(c, f))},
              {"beat_MHz", units::mhz(e.beat_omega)},
              {"fast_MHz", units::mhz(d.omega(s.fast))},
              {"Phi_rad", relative_angle(d, s.slow, s.fast)},
              {"chi_min", e.chi_min},
              {"period_us", num(e.period_us)},
              {"decomposition", to_json(d)}};
}

CsvTable grid_to_csv(const SensitivityGrid& g) {
  CsvTable t;
  t.add_meta("quantity", g.quantity);
  t.add_meta("rows", g.rows.name + " [" + g.rows.unit + "]");
  t.add_meta("columns", g.cols.name + " [" + g.cols.unit + "]");
  t.add_meta("layout", "first column is the row axis; header cells after it are column-axis values");
  for (const auto& [k, v] : g.annotations) t.add_meta(k, v);
  t.header.push_back(g.rows.name + "_" + g.rows.unit);
  for (double v : g.cols.values) t.header.push_back(format_shortest(v));
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    std::vector<double> row{g.rows.values[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) row.push_back(g.values(i, j));
    t.add_row(row);
  }
  return t;
}

Json grid_axes(const SensitivityGrid& g) {
  Json ann = Json::object();
  for (const auto& [k, v] : g.annotations) ann[k] = num(v);
  return Json{{"quantity", g.quantity},
              {"rows", {{"name", g.rows.name}, {"unit", g.rows.unit}, {"values", g.rows.values}}},
              {"columns", {{"name", g.cols.name}, {"unit", g.cols.unit}, {"values", g.cols.values}}},
              {"annotations", ann}};
}

CsvTable contours_to_csv(const std::vector<ContourLine>& lines) {
  CsvTable t;
  t.add_meta("layout", "one row per vertex; x is the column axis, y the row axis");
  t.header = {"level", "line", "vertex", "x", "y", "closed"};
  for (std::size_t l = 0; l < lines.size(); ++l) {
    for (std::size_t k = 0; k < lines[l].points.size(); ++k) {
      t.add_row({lines[l].level, static_cast<double>(l), static_cast<double>(k), lines[l].points[k][0],
                 lines[l].points[k][1], lines[l].closed ? 1.0 : 0.0});
    }
  }
  return t;
}

}  // namespace ereem
