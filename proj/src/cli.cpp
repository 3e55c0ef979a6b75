#include "ereem/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include "ereem/calibration.hpp"
#include "ereem/errors.hpp"
#include "ereem/figures.hpp"
#include "ereem/fitting.hpp"
#include "ereem/io.hpp"
#include "ereem/pulse_sim.hpp"
#include "ereem/report.hpp"
#include "ereem/sensitivity.hpp"
#include "ereem/units.hpp"

namespace ereem::cli {

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char ch : key) {
    if (ch == '~') out += "~0";
    else if (ch == '/') out += "~1";
    else out += ch;
  }
  return out;
}

/// Strict view of one JSON object: every key must be consumed before done().
class Node {
 public:
  Node(const Json* j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (j_ && !j_->is_object()) throw ConfigError(pointer_.empty() ? "/" : pointer_, "expected an object");
  }

  bool present() const { return j_ != nullptr; }
  bool has(const std::string& key) const { return j_ && j_->contains(key); }
  std::string at(const std::string& key) const { return pointer_ + "/" + escape_pointer(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const Json* v = take(key);
    if (!v) {
      if (!fallback) throw ConfigError(at(key), "required number is missing");
      return *fallback;
    }
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    return v->get<double>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const Json* v = take(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const Json* v = take(key);
    if (!v) {
      if (!fallback) throw ConfigError(at(key), "required string is missing");
      return *fallback;
    }
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = take(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const Json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  Node child(const std::string& key) {
    const Json* v = take(key);
    return Node(v, at(key));
  }

  void done() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const Json* take(const std::string& key) {
    if (!j_) return nullptr;
    used_.insert(key);
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  const Json* j_;
  std::string pointer_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& pointer, const std::string& message) {
  if (!ok) throw ConfigError(pointer, message);
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::string> species;
};

struct Common {
  SpeciesConstants constants;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path out = "out";
  Json echo;  // resolved settings recorded in the manifest
};

Json load_config(const std::string& path) {
  if (path.empty()) return Json{{"schema_version", kSchemaVersion}};
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
}

Common read_common(Node& root, const Flags& flags, const std::string& command) {
  Common c;
  const double version = root.number("schema_version", std::nullopt);
  require(version == kSchemaVersion, root.at("schema_version"),
          "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  const std::string cmd = root.string("command", command);
  require(cmd == command, root.at("command"), "config is for '" + cmd + "', not '" + command + "'");

  std::string species = root.string("species", "n15");
  if (flags.species) species = *flags.species;
  try {
    c.constants = SpeciesConstants::defaults(species_from_string(species));
  } catch (const std::invalid_argument&) {
    throw ConfigError(flags.species ? "" : root.at("species"), "unknown species '" + species + "' (n15 | n14)");
  }
  Node k = root.child("constants");
  c.constants.zero_field_mhz = k.number("D_MHz", c.constants.zero_field_mhz);
  c.constants.gamma_e_mhz_per_g = k.number("gamma_e_MHz_per_G", c.constants.gamma_e_mhz_per_g);
  c.constants.gamma_n_mhz_per_g = k.number("gamma_n_MHz_per_G", c.constants.gamma_n_mhz_per_g);
  c.constants.a_perp_mhz = k.number("A_perp_MHz", c.constants.a_perp_mhz);
  c.constants.a_par_mhz = k.number("A_par_MHz", c.constants.a_par_mhz);
  c.constants.quadrupole_mhz = k.number("Q_MHz", c.constants.quadrupole_mhz);
  k.done();
  try {
    c.constants.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(root.at("constants"), e.what());
  }

  c.seed = flags.seed ? *flags.seed : root.unsigned_integer("seed", 0);
  if (flags.seed) root.unsigned_integer("seed", 0);
  const std::uint64_t threads = root.unsigned_integer("threads", 0);
  c.threads = flags.threads ? *flags.threads : static_cast<unsigned>(threads);
  const std::string out = root.string("out", "out");
  c.out = flags.out ? *flags.out : out;
  c.echo = Json{{"species", to_string(c.constants.species)}, {"constants", to_json(c.constants)}, {"seed", c.seed}};
  return c;
}

BiasField read_field(Node& root) {
  Node f = root.child("field");
  require(f.present(), root.at("field"), "required object is missing");
  const double b = f.number("B_G");
  const double th = f.number("theta_deg");
  f.done();
  require(std::isfinite(b) && b >= 0, f.at("B_G"), "field magnitude must be >= 0");
  require(th >= 0 && th <= 90, f.at("theta_deg"), "misalignment angle must lie in [0, 90] degrees");
  return BiasField::from_degrees(b, th);
}

Protocol read_protocol(Node& root, const std::string& fallback = "sq+") {
  const std::string p = root.string("protocol", fallback);
  try {
    return protocol_from_string(p);
  } catch (const std::invalid_argument&) {
    throw ConfigError(root.at("protocol"), "unknown protocol '" + p + "' (sq+ | sq- | dq)");
  }
}

std::vector<double> read_grid(Node& root, const std::string& key, const std::string& unit, double lo_bound,
                              std::vector<double> fallback) {
  Node g = root.child(key);
  if (!g.present()) return fallback;
  const double a = g.number("start_" + unit);
  const double b = g.number("stop_" + unit);
  const double n = g.number("points");
  g.done();
  require(std::isfinite(a) && a >= lo_bound, g.at("start_" + unit), "grid start out of range");
  require(std::isfinite(b) && b > a, g.at("stop_" + unit), "grid stop must exceed start");
  require(n >= 2 && n <= 1e6 && n == std::floor(n), g.at("points"), "points must be an integer in [2, 1e6]");
  return linear_grid(a, b, static_cast<std::size_t>(n));
}

PulseSpec read_pulse(Node& root) {
  PulseSpec p;
  Node n = root.child("pulse");
  p.rabi_mhz = n.number("rabi_MHz", p.rabi_mhz);
  p.carrier_mhz = n.number("carrier_MHz", p.carrier_mhz);
  p.carrier_offset_mhz = n.number("carrier_offset_MHz", p.carrier_offset_mhz);
  p.phase_rad = n.number("phase_rad", p.phase_rad);
  p.duration_us = n.number("duration_us", p.duration_us);
  p.steps_per_period = static_cast<int>(n.number("steps_per_period", p.steps_per_period));
  n.done();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(root.at("pulse"), e.what());
  }
  return p;
}

std::string read_initial_state(Node& root) {
  const std::string s = root.string("initial_state", "0,-1/2");
  require(s == "unpolarized" || s.rfind("0,", 0) == 0, root.at("initial_state"),
          "initial state must be \"0,<m_I>\" or \"unpolarized\"");
  return s;
}

void finish(OutputWriter& w, const std::string& command, const Common& c, std::ostream& out, const Json& summary) {
  w.write_manifest(command, c.echo.dump());
  Json s = summary;
  s["out"] = w.root().string();
  out << s.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_constants(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "constants");
  root.done();
  out << constants_table(c.constants);
  if (flags.out) {
    OutputWriter w(c.out);
    w.write("constants.json", to_json(c.constants).dump(2) + "\n");
    w.write_manifest("constants", c.echo.dump());
  }
  return kOk;
}

int cmd_simulate(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "simulate");
  const BiasField f = read_field(root);
  const Protocol p = read_protocol(root);
  const std::string model = root.string("model", "pulse");
  require(model == "pulse" || model == "analytic", root.at("model"), "model must be \"pulse\" or \"analytic\"");
  std::vector<double> tau = read_grid(root, "tau", "us", 0, {});
  const PulseSpec pulse = read_pulse(root);
  const std::string init = read_initial_state(root);
  Node dg = root.child("degrade");
  const double t2 = dg.number("T2_star_us", std::numeric_limits<double>::infinity());
  const double stretch = dg.number("p", 1);
  const double sigma = dg.number("noise_sigma", 0);
  dg.done();
  require(t2 > 0, dg.at("T2_star_us"), "T2* must be positive");
  require(stretch > 0, dg.at("p"), "stretch exponent must be positive");
  require(sigma >= 0, dg.at("noise_sigma"), "noise sigma must be >= 0");
  root.done();

  if (tau.empty()) tau = default_tau_grid(c.constants, f, p);
  RamseyTrace trace;
  if (model == "pulse") {
    SimulationOptions so;
    so.pulse = pulse;
    so.initial_state = init;
    so.threads = c.threads;
    trace = simulate_ramsey_trace(c.constants, f, p, tau, so);
  } else {
    trace = analytic_trace(c.constants, f, p, tau);
  }
  if (std::isfinite(t2) || sigma > 0) {
    trace = degrade_trace(trace, t2, stretch, sigma, derive_seed(c.seed, 0));
  }
  OutputWriter w(c.out);
  w.write_csv("trace.csv", trace_to_csv(trace));
  Json summary{{"command", "simulate"}, {"model", model}, {"points", trace.size()},
               {"prediction", envelope_summary(c.constants, f, p)}};
  if (trace.meta.drive) summary["pulse_duration_us"] = trace.meta.drive->pulse_duration_us;
  w.write("summary.json", summary.dump(2) + "\n");
  finish(w, "simulate", c, out, summary);
  return kOk;
}

int cmd_fit(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "fit");
  const std::string path = root.string("trace");
  const std::string model = root.string("model", "two_tone");
  require(model == "two_tone" || model == "four_tone", root.at("model"), "model must be \"two_tone\" or \"four_tone\"");
  const bool decay = root.boolean("fit_decay", true);
  const double confidence = root.number("confidence", 0.95);
  require(confidence > 0 && confidence < 1, root.at("confidence"), "confidence must lie in (0, 1)");
  Node bs = root.child("bootstrap");
  const std::uint64_t resamples = bs.unsigned_integer("resamples", 0);
  bs.done();
  Node ft = root.child("four_tone");
  std::optional<double> da, db, w0;
  if (model == "four_tone") {
    require(ft.present(), root.at("four_tone"), "four-tone fits need detunings");
    da = ft.number("delta_a_MHz");
    db = ft.number("delta_b_MHz");
    w0 = ft.number("omega0_guess_MHz");
  }
  ft.done();
  root.done();

  const RamseyTrace trace = trace_from_csv(parse_csv(read_text_file(path)));
  OutputWriter w(c.out);
  Json summary{{"command", "fit"}, {"model", model}};
  FitResult base;
  CurveModel curve;
  std::vector<double> fitted;
  if (model == "two_tone") {
    EreemFitOptions opt;
    opt.fit_decay = decay;
    const EreemFitResult r = fit_ereem_trace(trace, opt);
    w.write("fit.json", to_json(r, confidence).dump(2) + "\n");
    summary["omega0_MHz"] = r.omega0_mhz;
    summary["omega0_se_MHz"] = r.omega0_mhz_se;
    summary["chi_min"] = r.chi_min;
    summary["chi_min_se"] = r.chi_min_se;
    base = r.fit;
    curve = ereem_curve_model();
    if (resamples > 0) {
      BootstrapOptions bo;
      bo.resamples = resamples;
      bo.seed = c.seed;
      bo.threads = c.threads;
      bo.confidence = confidence;
      const BootstrapResult b = bootstrap_ereem(trace, r, bo, opt);
      w.write("bootstrap.json", to_json(b).dump(2) + "\n");
      summary["bootstrap_valid"] = b.valid;
    }
  } else {
    const FourToneFitResult r =
        fit_four_tone(trace, units::angular(*da), units::angular(*db), units::angular(*w0), decay);
    w.write("fit.json", to_json(r, confidence).dump(2) + "\n");
    summary["omega0_MHz"] = r.omega0_mhz;
    summary["omega0_se_MHz"] = r.omega0_mhz_se;
    base = r.fit;
    curve = four_tone_curve_model();
    if (resamples > 0) {
      BootstrapOptions bo;
      bo.resamples = resamples;
      bo.seed = c.seed;
      bo.threads = c.threads;
      bo.confidence = confidence;
      LeastSquaresOptions so;
      so.fixed = base.fixed;
      const BootstrapResult b = bootstrap_confidence(curve, trace.tau_us, trace.signal, base, so, bo);
      w.write("bootstrap.json", to_json(b).dump(2) + "\n");
      summary["bootstrap_valid"] = b.valid;
    }
  }
  for (double t : trace.tau_us) fitted.push_back(curve.value(base.params, t));
  std::vector<double> resid(trace.size());
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = trace.signal[i] - fitted[i];
  CsvTable t = CsvTable::from_columns({"tau_us", "signal", "model", "residual"}, {trace.tau_us, trace.signal, fitted, resid});
  t.add_meta("units", "tau_us=us;signal=m_s=0 population");
  w.write_csv("fitted.csv", t);
  finish(w, "fit", c, out, summary);
  return kOk;
}

int cmd_map(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "map");
  const std::string kind = root.string("kind", "chi_min");
  require(kind == "chi_min" || kind == "relative_sensitivity", root.at("kind"),
          "kind must be \"chi_min\" or \"relative_sensitivity\"");
  const Protocol p = read_protocol(root, kind == "chi_min" ? "sq+" : "sq+");
  const std::vector<double> fields = read_grid(root, "B", "G", 0, GridDefaults::field());
  const std::vector<double> levels = root.numbers("contour_levels", {0.9, 0.5});
  SensitivityParams sp;
  sp.gamma_e_mhz_per_g = std::abs(c.constants.gamma_e_mhz_per_g);
  Node s = root.child("sensitivity");
  sp.dead_time_us = s.number("T_D_us", sp.dead_time_us);
  sp.t2_star_us = s.number("T2_star_us", sp.t2_star_us);
  sp.stretch = s.number("p", sp.stretch);
  s.done();
  try {
    sp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(root.at("sensitivity"), e.what());
  }
  SensitivityGrid g;
  if (kind == "chi_min") {
    std::vector<double> th = read_grid(root, "theta", "deg", 0, {});
    if (th.empty()) {
      th = GridDefaults::theta();
    } else {
      require(th.back() <= 90, root.at("theta"), "angles must lie in [0, 90] degrees");
      for (double& t : th) t = units::radians(t);
    }
    root.done();
    g = chi_min_map(c.constants, p, fields, th, c.threads);
  } else {
    const double th = root.number("theta_deg");
    require(th >= 0 && th <= 90, root.at("theta_deg"), "angle must lie in [0, 90] degrees");
    const std::vector<double> tau = read_grid(root, "tau", "us", 0, GridDefaults::tau(sp));
    root.done();
    g = relative_sensitivity_map(c.constants, sp, p, units::radians(th), fields, tau, c.threads);
  }
  OutputWriter w(c.out);
  CsvTable t = grid_to_csv(g);
  t.add_meta("units", g.rows.name + "=" + g.rows.unit + ";" + g.cols.name + "=" + g.cols.unit + ";values=" + g.quantity);
  t.add_meta("protocol", to_string(p));
  if (kind == "relative_sensitivity" && sp.stretch != 1) t.add_meta("stretch_generalized", "true");
  w.write_csv("grid.csv", t);
  w.write("axes.json", grid_axes(g).dump(2) + "\n");
  std::vector<ContourLine> lines;
  for (double level : levels) {
    auto l = extract_contours(g, level);
    lines.insert(lines.end(), l.begin(), l.end());
  }
  CsvTable ct = contours_to_csv(lines);
  ct.add_meta("units", "x=" + g.cols.name + " [" + g.cols.unit + "];y=" + g.rows.name + " [" + g.rows.unit + "]");
  w.write_csv("contours.csv", ct);
  Json summary{{"command", "map"}, {"kind", kind}, {"min", g.values.minCoeff()}, {"max", g.values.maxCoeff()},
               {"contour_lines", lines.size()}};
  finish(w, "map", c, out, summary);
  return kOk;
}

std::pair<std::vector<double>, std::vector<double>> read_spectrum_csv(const std::string& path, const std::string& x) {
  const CsvTable t = parse_csv(read_text_file(path));
  return {t.column(x), t.column("signal")};
}

int cmd_calibrate(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "calibrate");
  const std::string kind = root.string("kind", "field");
  OutputWriter w(c.out);
  Json summary{{"command", "calibrate"}, {"kind", kind}};
  if (kind == "field") {
    const double a = root.number("aligned_MHz");
    const double m = root.number("misaligned_MHz");
    const double ase = root.number("aligned_se_MHz", 0);
    const double mse = root.number("misaligned_se_MHz", 0);
    const bool floor = root.boolean("angle_floor", true);
    root.done();
    require(a > 0, root.at("aligned_MHz"), "aligned splitting must be positive");
    require(m >= 0 && m <= a, root.at("misaligned_MHz"), "misaligned splitting must lie in [0, aligned]");
    require(ase >= 0, root.at("aligned_se_MHz"), "standard error must be >= 0");
    require(mse >= 0, root.at("misaligned_se_MHz"), "standard error must be >= 0");
    const FieldEstimate e = estimate_field(a, m, c.constants, ase, mse, floor);
    const Json j = to_json(e);
    w.write("field_estimate.json", j.dump(2) + "\n");
    summary["estimate"] = j;
  } else if (kind == "scan") {
    const double b = root.number("B_G", 90);
    require(b > 0, root.at("B_G"), "field magnitude must be positive");
    std::vector<double> th = read_grid(root, "theta", "deg", 0, linear_grid(0, 45, 91));
    require(th.back() <= 90, root.at("theta"), "angles must lie in [0, 90] degrees");
    root.done();
    for (double& t : th) t = units::radians(t);
    const auto scan = approximation_error_scan(c.constants, b, th, c.threads);
    CsvTable t;
    t.add_meta("units", "theta_deg=deg;delta=MHz;pct=percent");
    t.add_meta("B_G", b);
    t.header = {"theta_deg", "delta_approx_MHz", "delta_exact_MHz", "abs_deviation_MHz", "pct_deviation"};
    for (const auto& r : scan.rows) {
      t.add_row({r.theta_deg, r.approx_mhz, r.exact_mhz, r.abs_deviation_mhz, r.pct_deviation});
    }
    w.write_csv("scan.csv", t);
    summary["max_pct_deviation"] = scan.max_pct_deviation;
  } else if (kind == "center") {
    const std::string odmr_path = root.string("odmr_csv", "");
    const std::string fringe_path = root.string("fringe_csv", "");
    Node syn = root.child("synthetic");
    const double center = syn.number("center_MHz", 2619.5);
    const double shift = syn.number("fringe_shift_MHz", 0);
    const double noise = syn.number("noise", 0);
    syn.done();
    root.done();
    require(noise >= 0, syn.at("noise"), "noise must be >= 0");
    std::vector<double> onu, oy, fnu, fy;
    if (!odmr_path.empty()) {
      std::tie(onu, oy) = read_spectrum_csv(odmr_path, "frequency_MHz");
    } else {
      onu = linear_grid(center - 8, center + 8, 401);
      SyntheticDoublet d;
      d.center_mhz = {center - c.constants.a_par_mhz / 2, center + c.constants.a_par_mhz / 2};
      d.noise = noise * 0.01;
      d.seed = derive_seed(c.seed, 0);
      oy = synthetic_odmr(d, onu);
    }
    if (!fringe_path.empty()) {
      std::tie(fnu, fy) = read_spectrum_csv(fringe_path, "frequency_MHz");
    } else {
      fnu = linear_grid(center - 2, center + 2, 201);
      SyntheticFringe s;
      s.center_mhz = center + shift;
      s.splitting_mhz = c.constants.a_par_mhz;
      s.noise = noise;
      s.seed = derive_seed(c.seed, 1);
      fy = synthetic_fringe(s, fnu);
    }
    CsvTable ot = CsvTable::from_columns({"frequency_MHz", "signal"}, {onu, oy});
    ot.add_meta("units", "frequency_MHz=MHz;signal=normalized fluorescence");
    w.write_csv("odmr.csv", ot);
    CsvTable ft = CsvTable::from_columns({"frequency_MHz", "signal"}, {fnu, fy});
    ft.add_meta("units", "frequency_MHz=MHz;signal=m_s=0 population");
    w.write_csv("fringe.csv", ft);
    const CenterCalibration cal = mw_center_frequency(onu, oy, fnu, fy);
    const Json j = to_json(cal);
    w.write("center_calibration.json", j.dump(2) + "\n");
    summary["nu_star_MHz"] = cal.nu_star_mhz;
    summary["nu_calibrated_MHz"] = cal.nu_calibrated_mhz;
    summary["detunings_MHz"] = j["detunings_MHz"];
  } else {
    throw ConfigError(root.at("kind"), "kind must be \"field\", \"scan\" or \"center\"");
  }
  finish(w, "calibrate", c, out, summary);
  return kOk;
}

int cmd_crosscheck(const Flags& flags, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "crosscheck");
  const BiasField f = read_field(root);
  const Protocol p = read_protocol(root);
  std::vector<double> tau = read_grid(root, "tau", "us", 0, {});
  const PulseSpec pulse = read_pulse(root);
  const std::string init = read_initial_state(root);
  root.done();
  if (tau.empty()) tau = default_tau_grid(c.constants, f, p);
  SimulationOptions so;
  so.pulse = pulse;
  so.initial_state = init;
  so.threads = c.threads;
  const RamseyTrace trace = simulate_ramsey_trace(c.constants, f, p, tau, so);
  const CrosscheckResult r = crosscheck_envelope(trace);
  OutputWriter w(c.out);
  w.write_csv("trace.csv", trace_to_csv(trace));
  const Json j = to_json(r);
  w.write("crosscheck.json", j.dump(2) + "\n");
  Json summary{{"command", "crosscheck"}, {"result", j}};
  finish(w, "crosscheck", c, out, summary);
  return kOk;
}

int cmd_figure(const Flags& flags, const std::string& id, std::ostream& out) {
  Json cfg = load_config(flags.config);
  Node root(&cfg, "");
  Common c = read_common(root, flags, "reproduce-figure");
  root.done();
  if (!is_figure_id(id)) {
    std::string ids;
    for (const auto& s : figure_ids()) ids += (ids.empty() ? "" : ", ") + s;
    throw ConfigError("", "unsupported figure id '" + id + "' (supported: " + ids + ")");
  }
  FigureContext ctx{c.constants, c.seed, c.threads};
  OutputWriter w(c.out / id);
  Json summary = reproduce_figure(id, ctx, w);
  Json echo = c.echo;
  echo["figure"] = id;
  w.write_manifest("reproduce-figure", echo.dump());
  Json s{{"command", "reproduce-figure"}, {"figure", id}, {"out", w.root().string()}, {"summary", summary}};
  out << s.dump(2) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NV-center Ramsey envelope modulation lab: simulations, fits, maps and calibrations"};
  app.name("ereem-lab");
  app.require_subcommand(1);
  Flags flags;
  std::uint64_t seed = 0;
  std::string out_dir, species;
  unsigned threads = 0;
  std::string figure_id;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--seed", seed, "random seed (u64)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: EREEM_LAB_THREADS or hardware)");
    sub->add_option("--species", species, "nitrogen isotope")->check(CLI::IsMember({"n15", "n14"}));
  };
  auto* constants = app.add_subcommand("constants", "print the physical constants table");
  auto* simulate = app.add_subcommand("simulate", "simulate a Ramsey trace (pulse-level or closed form)");
  auto* fit = app.add_subcommand("fit", "fit a Ramsey trace CSV, optionally with bootstrap intervals");
  auto* map = app.add_subcommand("map", "chi_min or relative-sensitivity maps with contours");
  auto* calibrate = app.add_subcommand("calibrate", "field estimate, splitting scan or microwave center calibration");
  auto* crosscheck = app.add_subcommand("crosscheck", "pulse simulation versus closed-form envelope");
  auto* figure = app.add_subcommand("reproduce-figure", "write the dataset bundle for one figure");
  for (auto* s : {constants, simulate, fit, map, calibrate, crosscheck, figure}) add_common(s);
  figure->add_option("id", figure_id, "figure id")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ereem-lab: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) flags.seed = seed;
  if (sub->count("--out")) flags.out = out_dir;
  if (sub->count("--threads")) flags.threads = threads;
  if (sub->count("--species")) flags.species = species;

  try {
    if (sub == constants) return cmd_constants(flags, out);
    if (sub == simulate) return cmd_simulate(flags, out);
    if (sub == fit) return cmd_fit(flags, out);
    if (sub == map) return cmd_map(flags, out);
    if (sub == calibrate) return cmd_calibrate(flags, out);
    if (sub == crosscheck) return cmd_crosscheck(flags, out);
    return cmd_figure(flags, figure_id, out);
  } catch (const ConfigError& e) {
    err << "ereem-lab: config error";
    if (!e.pointer().empty()) err << " at " << e.pointer();
    err << ": " << (e.pointer().empty() ? e.what() : std::string(e.what()).substr(e.pointer().size() + 2)) << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "ereem-lab: invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "ereem-lab: numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const IoError& e) {
    err << "ereem-lab: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "ereem-lab: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "ereem-lab: numerical failure: " << e.what() << "\n";
    return kNumericalError;
  }
}

}  // namespace ereem::cli
