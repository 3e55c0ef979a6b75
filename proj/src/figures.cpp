#include "ereem/figures.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "ereem/calibration.hpp"
#include "ereem/errors.hpp"
#include "ereem/fitting.hpp"
#include "ereem/format.hpp"
#include "ereem/pulse_sim.hpp"
#include "ereem/sensitivity.hpp"
#include "ereem/spectrum.hpp"
#include "ereem/units.hpp"

namespace ereem {

namespace {

// reference beat measurement the A_perp discrepancy is quoted against
constexpr double kRefFieldG = 90.08;
constexpr double kRefThetaDeg = 25.72;
constexpr double kRefOmega0Mhz = 0.2736;

const std::vector<double> kSweepFields{40, 65, 90.08, 115, 140};

std::vector<double> degrees_grid(double lo, double hi, double step) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  return linear_grid(lo, hi, n);
}

SensitivityParams default_sensitivity(const SpeciesConstants& c) {
  SensitivityParams sp;
  sp.dead_time_us = 5;
  sp.t2_star_us = 5;
  sp.stretch = 1;
  sp.gamma_e_mhz_per_g = std::abs(c.gamma_e_mhz_per_g);
  return sp;
}

CsvTable spectrum_csv(const Periodogram& pg) {
  CsvTable t = CsvTable::from_columns({"frequency_MHz", "power"}, {pg.frequency_mhz, pg.power});
  t.add_meta("units", "frequency_MHz=MHz;power=arb. (Hann-windowed |FFT|^2)");
  t.add_meta("resolution_MHz", pg.resolution_mhz);
  return t;
}

Json peaks_json(const Periodogram& pg, std::size_t count) {
  Json a = Json::array();
  for (const auto& pk : find_peaks(pg, count)) a.push_back({{"frequency_MHz", pk.frequency_mhz}, {"power", pk.power}});
  return a;
}

void write_json(OutputWriter& out, const std::string& name, const Json& j) { out.write(name, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------

Json fig_2c(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const BiasField f = BiasField::from_degrees(100, 15);
  const Protocol p = Protocol::SqPlus;
  const auto tau = default_tau_grid(c, f, p);
  const auto d = effective_field_decomposition(c, f);
  const RamseyTrace model = analytic_trace(c, f, p, tau);
  std::vector<double> chi, upper, lower;
  for (double t : tau) {
    chi.push_back(envelope(d, p, t));
    upper.push_back(0.5 + 0.5 * chi.back());
    lower.push_back(0.5 - 0.5 * chi.back());
  }
  CsvTable mt = CsvTable::from_columns({"tau_us", "signal", "chi", "envelope_upper", "envelope_lower"},
                                       {tau, model.signal, chi, upper, lower});
  mt.add_meta("units", "tau_us=us;signal=m_s=0 population;chi=dimensionless");
  mt.add_meta("B_G", f.magnitude_g);
  mt.add_meta("theta_deg", 15.0);
  mt.add_meta("protocol", to_string(p));
  out.write_csv("trace_model.csv", mt);

  SimulationOptions so;
  so.threads = ctx.threads;
  const RamseyTrace sim = simulate_ramsey_trace(c, f, p, tau, so);
  out.write_csv("trace_pulse_sim.csv", trace_to_csv(sim));
  const CrosscheckResult cc = crosscheck_envelope(sim);
  Json s{{"figure", "2c"}, {"prediction", envelope_summary(c, f, p)}, {"pulse_sim_fit", to_json(cc)}};
  write_json(out, "summary.json", s);
  return Json{{"chi_min_predicted", s["prediction"]["chi_min"]}, {"chi_min_pulse_sim", cc.chi_min_sim},
              {"omega0_deviation_pct", cc.omega0_deviation_pct}};
}

Json fig_2d(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const BiasField f = BiasField::from_degrees(100, 15);
  const Protocol p = Protocol::SqPlus;
  const RamseyTrace model = analytic_trace(c, f, p, default_tau_grid(c, f, p));
  const Periodogram pg = periodogram(model.tau_us, model.signal);
  out.write_csv("spectrum.csv", spectrum_csv(pg));
  const auto peaks = find_peaks(pg, 2);
  double split = 0;
  if (peaks.size() == 2) split = std::abs(peaks[0].frequency_mhz - peaks[1].frequency_mhz);
  const auto d = effective_field_decomposition(c, f);
  const double w0 = units::mhz(d.omega(0));
  const double w1 = units::mhz(d.omega(1));
  Json s{{"figure", "2d"},
         {"peaks", peaks_json(pg, 2)},
         {"peak_split_MHz", split},
         {"omega0_MHz", w0},
         {"expected_peaks_MHz", {(w1 - w0) / 2, (w1 + w0) / 2}},
         {"resolution_MHz", pg.resolution_mhz}};
  write_json(out, "peaks.json", s);
  return Json{{"peak_split_MHz", split}, {"omega0_MHz", w0}};
}

struct EnvelopeEstimate {
  double theta_deg = 0;
  bool ok = false;
  EreemFitResult fit;
};

// Fits to noisy decaying model traces at the reference field.
std::vector<EnvelopeEstimate> synthetic_estimates(const FigureContext& ctx) {
  const auto& c = ctx.constants;
  const std::vector<double> thetas{10, 15, 20, kRefThetaDeg, 30, 35, 40};
  const auto tau = linear_grid(0, 12, 600);
  std::vector<EnvelopeEstimate> est(thetas.size());
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const BiasField f = BiasField::from_degrees(kRefFieldG, thetas[k]);
    const RamseyTrace clean = analytic_trace(c, f, Protocol::SqPlus, tau);
    const RamseyTrace noisy = degrade_trace(clean, 5.0, 1.0, 0.01, derive_seed(ctx.seed, k));
    est[k].theta_deg = thetas[k];
    try {
      est[k].fit = fit_ereem_trace(noisy);
      est[k].ok = est[k].fit.fit.converged();
    } catch (const NumericalError&) {
      est[k].ok = false;
    }
  }
  return est;
}

Json estimates_table(const std::vector<EnvelopeEstimate>& est, OutputWriter& out) {
  const double z = normal_two_sided_z(0.95);
  CsvTable t;
  t.add_meta("units", "theta_deg=deg;omega0_MHz=MHz;chi_min=dimensionless;ci=95% standard interval");
  t.add_meta("B_G", kRefFieldG);
  t.add_meta("source", "fits to synthetic traces (T2*=5 us, sigma=0.01)");
  t.header = {"theta_deg", "omega0_MHz", "omega0_ci_lo", "omega0_ci_hi", "chi_min", "chi_min_ci_lo", "chi_min_ci_hi",
              "converged"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : est) {
    if (e.ok) {
      const auto& r = e.fit;
      t.add_row({e.theta_deg, r.omega0_mhz, r.omega0_mhz - z * r.omega0_mhz_se, r.omega0_mhz + z * r.omega0_mhz_se,
                 r.chi_min, r.chi_min - z * r.chi_min_se, r.chi_min + z * r.chi_min_se, 1});
    } else {
      t.add_row({e.theta_deg, nan, nan, nan, nan, nan, nan, 0});
    }
  }
  out.write_csv("synthetic_estimates.csv", t);
  Json a = Json::array();
  for (const auto& e : est) a.push_back({{"theta_deg", e.theta_deg}, {"converged", e.ok}});
  return a;
}

Json fig_3b(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const auto thetas = degrees_grid(0, 45, 0.5);
  const auto est = synthetic_estimates(ctx);
  estimates_table(est, out);

  Json refit = nullptr;
  double a_refit = std::numeric_limits<double>::quiet_NaN();
  if (c.quadrupole_mhz == 0) {
    std::vector<double> th, w;
    for (const auto& e : est) {
      if (!e.ok) continue;
      th.push_back(units::radians(e.theta_deg));
      w.push_back(e.fit.params.omega0);
    }
    if (th.size() >= 3) {
      const HyperfineRefit r = refit_transverse_hyperfine(kRefFieldG, th, w, c);
      a_refit = r.a_perp_mhz;
      refit = {{"A_perp_MHz", r.a_perp_mhz}, {"A_perp_se_MHz", r.a_perp_se_mhz}, {"ci_lo_MHz", r.ci_lo_mhz},
               {"ci_hi_MHz", r.ci_hi_mhz}};
    }
  }

  const BiasField ref = BiasField::from_degrees(kRefFieldG, kRefThetaDeg);
  const double predicted = units::mhz(omega0(c, ref));
  Json reference = {{"B_G", kRefFieldG}, {"theta_deg", kRefThetaDeg}, {"measured_omega0_MHz", kRefOmega0Mhz},
                    {"predicted_omega0_MHz", predicted},
                    {"deviation_pct", 100 * (kRefOmega0Mhz - predicted) / kRefOmega0Mhz}};
  double a_ref = std::numeric_limits<double>::quiet_NaN();
  if (c.quadrupole_mhz == 0) {
    a_ref = transverse_hyperfine_from_omega0(kRefFieldG, ref.theta_rad, units::angular(kRefOmega0Mhz), c);
    reference["A_perp_matching_MHz"] = a_ref;
  }

  std::vector<std::string> header{"theta_deg"};
  std::vector<std::vector<double>> cols{thetas};
  for (double b : kSweepFields) {
    const std::string tag = format_shortest(b);
    header.push_back("omega0_MHz_B" + tag);
    std::vector<double> col;
    for (double t : thetas) col.push_back(units::mhz(omega0(c, BiasField::from_degrees(b, t))));
    cols.push_back(col);
    if (std::isfinite(a_ref)) {
      SpeciesConstants cr = c;
      cr.a_perp_mhz = a_ref;
      header.push_back("omega0_MHz_B" + tag + "_Aperp_matched");
      col.clear();
      for (double t : thetas) col.push_back(units::mhz(omega0(cr, BiasField::from_degrees(b, t))));
      cols.push_back(col);
    }
    if (std::isfinite(a_refit)) {
      SpeciesConstants cr = c;
      cr.a_perp_mhz = a_refit;
      header.push_back("omega0_MHz_B" + tag + "_Aperp_refit");
      col.clear();
      for (double t : thetas) col.push_back(units::mhz(omega0(cr, BiasField::from_degrees(b, t))));
      cols.push_back(col);
    }
  }
  CsvTable t = CsvTable::from_columns(header, cols);
  t.add_meta("units", "theta_deg=deg;omega0=MHz");
  out.write_csv("omega0_predictions.csv", t);
  Json s{{"figure", "3b"}, {"reference", reference}, {"A_perp_refit_synthetic", refit}};
  write_json(out, "summary.json", s);
  return s;
}

Json fig_3c(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const auto thetas = degrees_grid(0, 45, 0.5);
  const auto est = synthetic_estimates(ctx);
  Json conv = estimates_table(est, out);
  std::vector<std::string> header{"theta_deg"};
  std::vector<std::vector<double>> cols{thetas};
  for (double b : kSweepFields) {
    header.push_back("chi_min_B" + format_shortest(b));
    std::vector<double> col;
    for (double t : thetas) {
      col.push_back(
          envelope_properties(effective_field_decomposition(c, BiasField::from_degrees(b, t)), Protocol::SqPlus).chi_min);
    }
    cols.push_back(col);
  }
  CsvTable t = CsvTable::from_columns(header, cols);
  t.add_meta("units", "theta_deg=deg;chi_min=dimensionless");
  t.add_meta("protocol", "sq+");
  out.write_csv("chi_min_predictions.csv", t);
  const double at10 =
      envelope_properties(effective_field_decomposition(c, BiasField::from_degrees(90, 10)), Protocol::SqPlus).chi_min;
  Json s{{"figure", "3c"}, {"chi_min_B90_theta10", at10}, {"estimates", conv}};
  write_json(out, "summary.json", s);
  return s;
}

Json fig_4a(const FigureContext& ctx, OutputWriter& out) {
  const SensitivityParams sp = default_sensitivity(ctx.constants);
  const WorkingPoint w = optimal_evolution_time(sp);
  const auto tau = GridDefaults::tau(sp);
  std::vector<double> inv, norm;
  for (double t : tau) {
    inv.push_back(inverse_sensitivity(sp, t));
    norm.push_back(inv.back() / w.inverse_eta);
  }
  CsvTable t = CsvTable::from_columns({"tau_us", "inverse_eta", "inverse_eta_normalized"}, {tau, inv, norm});
  t.add_meta("units", "tau_us=us;inverse_eta=1/(G sqrt(us)) for C=1 N=1;inverse_eta_normalized=dimensionless");
  t.add_meta("T_D_us", sp.dead_time_us);
  t.add_meta("T2_star_us", sp.t2_star_us);
  t.add_meta("p", sp.stretch);
  t.add_meta("tau_opt_us", w.tau_us);
  out.write_csv("inverse_sensitivity.csv", t);
  Json s{{"figure", "4a"}, {"optimum", to_json(w)}};
  write_json(out, "summary.json", s);
  return Json{{"tau_opt_us", w.tau_us}};
}

Json fig_4b(const FigureContext& ctx, OutputWriter& out) {
  const SensitivityParams sp = default_sensitivity(ctx.constants);
  const auto tau = GridDefaults::tau(sp);
  std::vector<std::string> header{"tau_us"};
  std::vector<std::vector<double>> cols{tau};
  Json curves = Json::array();
  for (double th : {10.0, 20.0}) {
    const auto r = relative_sensitivity_curve(ctx.constants, sp, Protocol::SqPlus, BiasField::from_degrees(100, th), tau);
    const std::string tag = format_shortest(th);
    header.push_back("ratio_theta" + tag);
    cols.push_back(r.ratio);
    header.push_back("chi_theta" + tag);
    cols.push_back(r.chi);
    curves.push_back({{"theta_deg", th}, {"tau_opt_us", r.tau_opt_us}, {"tau_opt_adjusted_us", r.adjusted.tau_us},
                      {"ratio_at_adjusted_optimum", r.adjusted_ratio}, {"bracketed", r.adjusted.bracketed}});
  }
  CsvTable t = CsvTable::from_columns(header, cols);
  t.add_meta("units", "tau_us=us;ratio=eta_opt/eta_tilde;chi=dimensionless");
  t.add_meta("B_G", 100.0);
  t.add_meta("protocol", "sq+");
  out.write_csv("relative_sensitivity.csv", t);
  Json s{{"figure", "4b"}, {"curves", curves}};
  write_json(out, "summary.json", s);
  return s;
}

Json sensitivity_map_bundle(const FigureContext& ctx, OutputWriter& out, double theta_deg, const std::string& stem) {
  const SensitivityParams sp = default_sensitivity(ctx.constants);
  const SensitivityGrid g = relative_sensitivity_map(ctx.constants, sp, Protocol::SqPlus, units::radians(theta_deg),
                                                     GridDefaults::field(), GridDefaults::tau(sp), ctx.threads);
  CsvTable t = grid_to_csv(g);
  t.add_meta("units", "B_G=G;tau_us=us;values=eta_opt/eta_tilde");
  out.write_csv(stem + ".csv", t);
  write_json(out, stem + "_axes.json", grid_axes(g));
  return Json{{"theta_deg", theta_deg}, {"max", g.values.maxCoeff()}, {"min", g.values.minCoeff()}};
}

Json fig_5a(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const BiasField f = BiasField::from_degrees(50, 35);
  const auto tau = linear_grid(0, 10, 1000);
  const RamseyTrace sq = analytic_trace(c, f, Protocol::SqPlus, tau);
  const RamseyTrace dq = analytic_trace(c, f, Protocol::Dq, tau);
  CsvTable t = CsvTable::from_columns({"tau_us", "signal_sq", "signal_dq"}, {tau, sq.signal, dq.signal});
  t.add_meta("units", "tau_us=us;signal=m_s=0 population");
  t.add_meta("B_G", 50.0);
  t.add_meta("theta_deg", 35.0);
  out.write_csv("traces.csv", t);
  Json s{{"figure", "5a"}, {"sq", envelope_summary(c, f, Protocol::SqPlus)}, {"dq", envelope_summary(c, f, Protocol::Dq)}};
  write_json(out, "summary.json", s);
  return Json{{"chi_min_sq", s["sq"]["chi_min"]}, {"chi_min_dq", s["dq"]["chi_min"]}};
}

Json fig_5b(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const BiasField f = BiasField::from_degrees(50, 35);
  const auto tau = linear_grid(0, 10, 1000);
  const RamseyTrace sq = analytic_trace(c, f, Protocol::SqPlus, tau);
  const RamseyTrace dq = analytic_trace(c, f, Protocol::Dq, tau);
  const Periodogram ps = periodogram(tau, sq.signal);
  const Periodogram pd = periodogram(tau, dq.signal);
  CsvTable t = CsvTable::from_columns({"frequency_MHz", "power_sq", "power_dq"}, {ps.frequency_mhz, ps.power, pd.power});
  t.add_meta("units", "frequency_MHz=MHz;power=arb.");
  out.write_csv("spectra.csv", t);
  const auto d = effective_field_decomposition(c, f);
  Json s{{"figure", "5b"},
         {"sq_peaks", peaks_json(ps, 4)},
         {"dq_peaks", peaks_json(pd, 4)},
         {"inset_effective_fields", to_json(d)},
         {"Phi_m1_p1_rad", relative_angle(d, -1, 1)},
         {"chi_min_dq", envelope_properties(d, Protocol::Dq).chi_min}};
  write_json(out, "summary.json", s);
  return Json{{"Phi_m1_p1_rad", s["Phi_m1_p1_rad"]}};
}

Json chi_map_bundle(const FigureContext& ctx, OutputWriter& out, Protocol p, const std::vector<double>& fields,
                    const std::vector<double>& thetas, const std::string& stem) {
  const SensitivityGrid g = chi_min_map(ctx.constants, p, fields, thetas, ctx.threads);
  CsvTable t = grid_to_csv(g);
  t.add_meta("units", "theta_deg=deg;B_G=G;values=chi_min");
  t.add_meta("protocol", to_string(p));
  out.write_csv(stem + ".csv", t);
  write_json(out, stem + "_axes.json", grid_axes(g));
  std::vector<ContourLine> lines;
  for (double level : {0.9, 0.5}) {
    auto l = extract_contours(g, level);
    lines.insert(lines.end(), l.begin(), l.end());
  }
  CsvTable ct = contours_to_csv(lines);
  ct.add_meta("units", "x=B_G;y=theta_deg");
  out.write_csv(stem + "_contours.csv", ct);
  return Json{{"protocol", to_string(p)}, {"min", g.values.minCoeff()}, {"max", g.values.maxCoeff()},
              {"contour_lines", lines.size()}};
}

Json fig_5c(const FigureContext& ctx, OutputWriter& out) {
  const auto fields = GridDefaults::field();
  const auto thetas = GridDefaults::theta();
  Json s{{"figure", "5c"},
         {"sq", chi_map_bundle(ctx, out, Protocol::SqPlus, fields, thetas, "chi_min_sq")},
         {"dq", chi_map_bundle(ctx, out, Protocol::Dq, fields, thetas, "chi_min_dq")}};
  write_json(out, "summary.json", s);
  return s;
}

Json fig_s1(const FigureContext& ctx, OutputWriter& out) {
  std::vector<double> th;
  for (double d : degrees_grid(0, 45, 0.5)) th.push_back(units::radians(d));
  const auto scan = approximation_error_scan(ctx.constants, 90, th, ctx.threads);
  CsvTable t;
  t.add_meta("units", "theta_deg=deg;delta=MHz;pct=percent");
  t.add_meta("B_G", 90.0);
  t.header = {"theta_deg", "delta_approx_MHz", "delta_exact_MHz", "abs_deviation_MHz", "pct_deviation"};
  for (const auto& r : scan.rows) t.add_row({r.theta_deg, r.approx_mhz, r.exact_mhz, r.abs_deviation_mhz, r.pct_deviation});
  out.write_csv("delta_deviation.csv", t);
  Json s{{"figure", "S1"}, {"B_G", 90.0}, {"max_pct_deviation", scan.max_pct_deviation}};
  write_json(out, "summary.json", s);
  return s;
}

Json fig_s3(const FigureContext& ctx, OutputWriter& out) {
  const auto& c = ctx.constants;
  const BiasField f = BiasField::from_degrees(kRefFieldG, kRefThetaDeg);
  const Protocol p = Protocol::SqPlus;
  const double w0 = omega0(c, f);
  const auto tau = linear_grid(0, 3 * units::two_pi / w0, 768);
  SimulationOptions so;
  so.threads = ctx.threads;

  // equal detunings from the two hyperfine lines
  const RamseyTrace eq = degrade_trace(simulate_ramsey_trace(c, f, p, tau, so), 10.0, 1.0, 0.01,
                                       derive_seed(ctx.seed, 0));
  so.pulse.carrier_offset_mhz = 4.0;
  const RamseyTrace det = degrade_trace(simulate_ramsey_trace(c, f, p, tau, so), 10.0, 1.0, 0.01,
                                        derive_seed(ctx.seed, 1));
  CsvTable t = CsvTable::from_columns({"tau_us", "signal_equal_detuning", "signal_detuned"}, {tau, eq.signal, det.signal});
  t.add_meta("units", "tau_us=us;signal=m_s=0 population");
  t.add_meta("carrier_offset_MHz", 4.0);
  t.add_meta("noise_sigma", 0.01);
  t.add_meta("T2_star_us", 10.0);
  out.write_csv("traces.csv", t);

  const EreemFitResult two = fit_ereem_trace(eq);
  const TransitionFrequencies tf = transition_frequencies(c, f);
  const ManifoldTransitions& m = tf.manifold(1);
  const double carrier = m.mean_mhz + 4.0;
  const double da = units::angular(carrier - m.frequencies_mhz.front());
  const double db = units::angular(carrier - m.frequencies_mhz.back());
  const FourToneFitResult four = fit_four_tone(det, da, db, w0);
  const double z = normal_two_sided_z(0.95);
  const double lo2 = two.omega0_mhz - z * two.omega0_mhz_se, hi2 = two.omega0_mhz + z * two.omega0_mhz_se;
  const double lo4 = four.omega0_mhz - z * four.omega0_mhz_se, hi4 = four.omega0_mhz + z * four.omega0_mhz_se;
  Json s{{"figure", "S3"},
         {"omega0_predicted_MHz", units::mhz(w0)},
         {"two_tone", to_json(two)},
         {"four_tone", to_json(four)},
         {"intervals_overlap", lo2 <= hi4 && lo4 <= hi2}};
  write_json(out, "summary.json", s);
  return Json{{"omega0_two_tone_MHz", two.omega0_mhz}, {"omega0_four_tone_MHz", four.omega0_mhz},
              {"intervals_overlap", s["intervals_overlap"]}};
}

Json fig_s5(const FigureContext& ctx, OutputWriter& out) {
  Json s{{"figure", "S5"},
         {"theta20", sensitivity_map_bundle(ctx, out, 20, "relative_sensitivity_theta20")},
         {"theta54.7", sensitivity_map_bundle(ctx, out, 54.7, "relative_sensitivity_theta54.7")}};
  write_json(out, "summary.json", s);
  return s;
}

Json fig_s6(const FigureContext& ctx, OutputWriter& out) {
  std::vector<double> fields(200);
  for (std::size_t k = 0; k < fields.size(); ++k) fields[k] = 4.0 * static_cast<double>(k + 1);
  std::vector<double> thetas;
  for (double d : degrees_grid(0, 90, 1)) thetas.push_back(units::radians(d));
  Json s{{"figure", "S6"}, {"dq", chi_map_bundle(ctx, out, Protocol::Dq, fields, thetas, "chi_min_dq")}};
  write_json(out, "summary.json", s);
  return s;
}

using FigureFn = std::function<Json(const FigureContext&, OutputWriter&)>;

const std::map<std::string, FigureFn>& registry() {
  static const std::map<std::string, FigureFn> r{
      {"2c", fig_2c},
      {"2d", fig_2d},
      {"3b", fig_3b},
      {"3c", fig_3c},
      {"4a", fig_4a},
      {"4b", fig_4b},
      {"4c", [](const FigureContext& c, OutputWriter& o) {
         Json s{{"figure", "4c"}, {"map", sensitivity_map_bundle(c, o, 10, "relative_sensitivity_theta10")}};
         write_json(o, "summary.json", s);
         return s;
       }},
      {"5a", fig_5a},
      {"5b", fig_5b},
      {"5c", fig_5c},
      {"S1", fig_s1},
      {"S3", fig_s3},
      {"S5", fig_s5},
      {"S6", fig_s6},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"2c", "2d", "3b", "3c", "4a", "4b", "4c",
                                            "5a", "5b", "5c", "S1", "S3", "S5", "S6"};
  return ids;
}

bool is_figure_id(const std::string& id) { return registry().count(id) > 0; }

Json reproduce_figure(const std::string& id, const FigureContext& ctx, OutputWriter& out) {
  const auto it = registry().find(id);
  if (it == registry().end()) throw std::invalid_argument("unsupported figure id '" + id + "'");
  return it->second(ctx, out);
}

}  // namespace ereem
