#include "ereem/pulse_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ereem/parallel.hpp"
#include "ereem/spectrum.hpp"
#include "ereem/units.hpp"

namespace ereem {

void PulseSpec::validate() const {
  if (!(rabi_mhz > 0) || !std::isfinite(rabi_mhz)) throw std::invalid_argument("pulse: Rabi frequency must be positive");
  if (carrier_mhz < 0 || !std::isfinite(carrier_mhz)) throw std::invalid_argument("pulse: carrier must be >= 0");
  if (duration_us < 0 || !std::isfinite(duration_us)) throw std::invalid_argument("pulse: duration must be >= 0");
  if (steps_per_period < 4) throw std::invalid_argument("pulse: need at least 4 steps per carrier period");
}

// ---------------------------------------------------------------------------
// Exact transition frequencies

namespace {

double block_weight(const ComplexVector& v, const SpeciesConstants& c, int ms) {
  const Eigen::Index nd = c.nuclear_dim();
  return v.segment(static_cast<Eigen::Index>(1 - ms) * nd, nd).squaredNorm();
}

struct LabeledLevels {
  // energies (MHz) indexed [ms + 1][nuclear index]
  std::array<std::vector<double>, 3> energy;
  std::array<double, 3> min_overlap{1, 1, 1};
};

LabeledLevels label_levels(const SpeciesConstants& c, const BiasField& f) {
  const ComplexMatrix h = lab_hamiltonian(c, f);
  const auto sys = hermitian_eigensystem(h);
  const Eigen::Index nd = c.nuclear_dim();
  std::array<std::vector<Eigen::Index>, 3> members;
  for (Eigen::Index k = 0; k < sys.eigenvalues.size(); ++k) {
    const ComplexVector v = sys.eigenvectors.col(k);
    int best = 0;
    double best_w = -1;
    for (int ms = -1; ms <= 1; ++ms) {
      const double w = block_weight(v, c, ms);
      if (w > best_w) {
        best_w = w;
        best = ms;
      }
    }
    if (best_w < 0.5) {
      std::ostringstream msg;
      msg << "transition_frequencies: eigenstate " << k << " has electronic weight " << best_w
          << " < 0.5; the field is outside the regime where m_s labels are meaningful";
      throw NumericalError(msg.str());
    }
    members[best + 1].push_back(k);
  }
  LabeledLevels out;
  for (int ms = -1; ms <= 1; ++ms) {
    auto& m = members[ms + 1];
    if (static_cast<Eigen::Index>(m.size()) != nd) {
      throw NumericalError("transition_frequencies: electronic labeling produced unbalanced manifolds");
    }
    // nuclear labels: permutation maximizing total overlap with |ms, m_I>
    std::vector<Eigen::Index> perm(nd);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Eigen::Index> best_perm = perm;
    double best_total = -1;
    do {
      double total = 0;
      for (Eigen::Index j = 0; j < nd; ++j) {
        total += std::norm(sys.eigenvectors(static_cast<Eigen::Index>(1 - ms) * nd + j, m[perm[j]]));
      }
      if (total > best_total) {
        best_total = total;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto& e = out.energy[ms + 1];
    e.resize(nd);
    for (Eigen::Index j = 0; j < nd; ++j) {
      const Eigen::Index k = m[best_perm[j]];
      e[j] = units::mhz(sys.eigenvalues(k));
      const double ov = std::norm(sys.eigenvectors(static_cast<Eigen::Index>(1 - ms) * nd + j, k));
      out.min_overlap[ms + 1] = std::min(out.min_overlap[ms + 1], ov);
    }
  }
  return out;
}

}  // namespace

TransitionFrequencies transition_frequencies(const SpeciesConstants& c, const BiasField& f) {
  const LabeledLevels lv = label_levels(c, f);
  TransitionFrequencies t;
  for (int ms : {+1, -1}) {
    ManifoldTransitions& m = ms > 0 ? t.plus : t.minus;
    m.ms = ms;
    const auto& up = lv.energy[ms + 1];
    const auto& zero = lv.energy[1];
    m.frequencies_mhz.resize(up.size());
    double sum = 0;
    for (std::size_t j = 0; j < up.size(); ++j) {
      m.frequencies_mhz[j] = std::abs(up[j] - zero[j]);
      sum += up[j] - zero[j];
    }
    m.mean_mhz = std::abs(sum / static_cast<double>(up.size()));
    m.min_nuclear_overlap = std::min(lv.min_overlap[ms + 1], lv.min_overlap[1]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Driven evolution

namespace {

struct Tone {
  double omega = 0;  // rad/us
  double phase = 0;
  double amplitude = 0;  // rad/us
};

ComplexMatrix matrix_power(ComplexMatrix base, long n) {
  ComplexMatrix result = ComplexMatrix::Identity(base.rows(), base.cols());
  while (n > 0) {
    if (n & 1) result = base * result;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

class Drive {
 public:
  Drive(const SpeciesConstants& c, const BiasField& f, std::vector<Tone> tones, int steps_per_period)
      : h0_(lab_hamiltonian(c, f)), tones_(std::move(tones)) {
    const auto e = spin_operators(1.0);
    v_ = tensor_product(e.sx, ComplexMatrix::Identity(c.nuclear_dim(), c.nuclear_dim()));
    double fastest = 0;
    for (const Tone& t : tones_) fastest = std::max(fastest, t.omega);
    if (!(fastest > 0)) throw std::invalid_argument("drive: carrier frequency must be positive");
    period_ = units::two_pi / fastest;
    step_ = period_ / steps_per_period;
    steps_per_period_ = steps_per_period;
  }

  double step_length() const { return step_; }
  Eigen::Index dim() const { return h0_.rows(); }
  const ComplexMatrix& h0() const { return h0_; }

  /// exp(-i H(t_mid) dt) with the drive frozen at the step midpoint.
  ComplexMatrix step(double t_mid, double dt) const {
    double field = 0;
    for (const Tone& t : tones_) field += t.amplitude * std::cos(t.omega * t_mid + t.phase);
    const ComplexMatrix h = h0_ + field * v_;
    return HermitianPropagator<double>(h)(dt);
  }

  /// Propagator for a pulse of the given length starting at t_start:
  /// whole nominal steps followed by one partial step.
  ComplexMatrix pulse(double t_start, double duration) const {
    ComplexMatrix u = ComplexMatrix::Identity(dim(), dim());
    double t = t_start;
    long remaining_steps = static_cast<long>(std::floor(duration / step_));
    if (tones_.size() == 1) {
      // the single-tone Hamiltonian is periodic, so whole periods reuse one propagator
      const long periods = remaining_steps / steps_per_period_;
      if (periods > 0) {
        ComplexMatrix p = ComplexMatrix::Identity(dim(), dim());
        for (int k = 0; k < steps_per_period_; ++k) p = step(t + (k + 0.5) * step_, step_) * p;
        u = matrix_power(p, periods);
        remaining_steps -= periods * steps_per_period_;
        t += static_cast<double>(periods * steps_per_period_) * step_;
      }
    }
    for (long k = 0; k < remaining_steps; ++k) {
      u = step(t + 0.5 * step_, step_) * u;
      t += step_;
    }
    const double partial = t_start + duration - t;
    if (partial > 0) u = step(t + 0.5 * partial, partial) * u;
    return u;
  }

 private:
  ComplexMatrix h0_, v_;
  std::vector<Tone> tones_;
  double period_ = 0;
  double step_ = 0;
  int steps_per_period_ = 64;
};

std::vector<Tone> drive_tones(const SpeciesConstants& c, const BiasField& f, const PulseSpec& spec, Protocol p) {
  const double amplitude = std::sqrt(2.0) * units::angular(spec.rabi_mhz);
  std::vector<int> manifolds;
  switch (p) {
    case Protocol::SqPlus: manifolds = {+1}; break;
    case Protocol::SqMinus: manifolds = {-1}; break;
    case Protocol::Dq: manifolds = {+1, -1}; break;
  }
  std::vector<Tone> tones;
  const bool automatic = spec.carrier_mhz == 0;
  const TransitionFrequencies tf = automatic ? transition_frequencies(c, f) : TransitionFrequencies{};
  for (int ms : manifolds) {
    double carrier = automatic ? tf.manifold(ms).mean_mhz : spec.carrier_mhz;
    carrier += spec.carrier_offset_mhz;
    if (!(carrier > 0)) throw std::invalid_argument("pulse: resulting carrier frequency must be positive");
    tones.push_back({units::angular(carrier), spec.phase_rad, amplitude});
  }
  if (!automatic && tones.size() > 1) {
    throw std::invalid_argument("pulse: an explicit carrier is only meaningful for single-tone (SQ) drives");
  }
  return tones;
}

/// Basis indices of the initial m_s = 0 states; several for an unpolarized nucleus.
std::vector<Eigen::Index> initial_indices(const SpeciesConstants& c, const std::string& label) {
  std::vector<Eigen::Index> out;
  if (label == "unpolarized") {
    for (Eigen::Index j = 0; j < c.nuclear_dim(); ++j) out.push_back(c.nuclear_dim() + j);
    return out;
  }
  const auto comma = label.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("initial state '" + label + "' is not 'ms,mI'");
  auto parse = [&](std::string s) {
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("bad number");
      return v;
    }
    const double num = std::stod(s.substr(0, slash), &used);
    const std::string den_s = s.substr(slash + 1);
    std::size_t used2 = 0;
    const double den = std::stod(den_s, &used2);
    if (used != slash || used2 != den_s.size() || den == 0) throw std::invalid_argument("bad fraction");
    return num / den;
  };
  double ms = 0, mi = 0;
  try {
    ms = parse(label.substr(0, comma));
    mi = parse(label.substr(comma + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("initial state '" + label + "' could not be parsed");
  }
  if (ms != 0) throw std::invalid_argument("initial state must lie in the m_s = 0 manifold");
  out.push_back(basis_index(c, 0, mi));
  return out;
}

double population_zero(const SpeciesConstants& c, const ComplexVector& psi) {
  return psi.segment(c.nuclear_dim(), c.nuclear_dim()).squaredNorm();
}

double mean_population_zero(const SpeciesConstants& c, const ComplexMatrix& u, const std::vector<Eigen::Index>& init) {
  double p = 0;
  for (Eigen::Index k : init) p += population_zero(c, u.col(k));
  return p / static_cast<double>(init.size());
}

}  // namespace

double nominal_pulse_duration(const PulseSpec& spec, Protocol p) {
  spec.validate();
  if (p == Protocol::Dq) return 1.0 / (2.0 * std::sqrt(2.0) * spec.rabi_mhz);
  return 1.0 / (4.0 * spec.rabi_mhz);
}

namespace {

double calibrate_with(const SpeciesConstants& c, const Drive& drive, Protocol p, const std::vector<Eigen::Index>& init,
                      double nominal) {
  const double h = drive.step_length();
  const long max_steps = static_cast<long>(std::ceil(1.6 * nominal / h));
  auto metric = [&](const ComplexMatrix& u) {
    const double p0 = mean_population_zero(c, u, init);
    return p == Protocol::Dq ? p0 : (1.0 - p0) - 0.5;
  };
  ComplexMatrix u = ComplexMatrix::Identity(drive.dim(), drive.dim());
  std::vector<ComplexMatrix> history;
  history.reserve(static_cast<std::size_t>(max_steps) + 1);
  history.push_back(u);
  for (long k = 0; k < max_steps; ++k) {
    u = drive.step((k + 0.5) * h, h) * u;
    history.push_back(u);
  }
  auto extend = [&](long k, double s) {  // duration k*h + s with 0 <= s <= h
    if (s <= 0) return history[static_cast<std::size_t>(k)];
    return ComplexMatrix(drive.step(k * h + 0.5 * s, s) * history[static_cast<std::size_t>(k)]);
  };

  if (p != Protocol::Dq) {
    for (long k = 0; k < max_steps; ++k) {
      const double m0 = metric(history[static_cast<std::size_t>(k)]);
      const double m1 = metric(history[static_cast<std::size_t>(k + 1)]);
      if (m0 < 0 && m1 >= 0) {
        double lo = 0, hi = h;
        for (int it = 0; it < 80 && hi - lo > 1e-15 * h; ++it) {
          const double mid = 0.5 * (lo + hi);
          (metric(extend(k, mid)) < 0 ? lo : hi) = mid;
        }
        const double d = k * h + 0.5 * (lo + hi);
        if (std::abs(metric(extend(k, 0.5 * (lo + hi)))) > 1e-4) {
          throw NumericalError("calibrate_pulse_duration: transfer could not be matched to 1/2 within 1e-4");
        }
        return d;
      }
    }
    throw NumericalError("calibrate_pulse_duration: no half-transfer point within 1.6x the ideal duration; "
                         "drive too weak relative to the detunings");
  }

  long best = 0;
  double best_m = std::numeric_limits<double>::infinity();
  for (long k = 1; k <= max_steps; ++k) {
    const double m = metric(history[static_cast<std::size_t>(k)]);
    if (m < best_m) {
      best_m = m;
      best = k;
    }
  }
  if (best == max_steps || best_m > 0.1) {
    throw NumericalError("calibrate_pulse_duration: no depletion minimum of the m_s = 0 population bracketed");
  }
  // golden-section on the duration within [best - 1, best + 1] steps
  auto eval = [&](double s) {  // s in [0, 2h] past step best - 1
    const long k = best - 1;
    if (s <= h) return metric(extend(k, s));
    return metric(extend(k + 1, std::min(s - h, h)));
  };
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = 0, b = 2 * h;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 100 && b - a > 1e-15 * h; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = eval(x2);
    }
  }
  return (best - 1) * h + 0.5 * (a + b);
}

}  // namespace

double calibrate_pulse_duration(const SpeciesConstants& c, const BiasField& f, const PulseSpec& spec, Protocol p,
                                const std::string& initial_state) {
  spec.validate();
  const Drive drive(c, f, drive_tones(c, f, spec, p), spec.steps_per_period);
  return calibrate_with(c, drive, p, initial_indices(c, initial_state), nominal_pulse_duration(spec, p));
}

std::vector<double> default_tau_grid(const SpeciesConstants& c, const BiasField& f, Protocol p, std::size_t points) {
  const auto env = envelope_properties(effective_field_decomposition(c, f), p);
  double stop = 3 * env.period_us;
  if (!std::isfinite(stop) || stop > 50.0) stop = 50.0;
  return linear_grid(0.0, stop, points);
}

namespace {

struct Sequence {
  const SpeciesConstants& c;
  Drive drive;
  HermitianPropagator<double> free;
  std::vector<Eigen::Index> init;
  double duration = 0;
  ComplexMatrix first;  // first pulse applied to the initial states, one column each

  Sequence(const SpeciesConstants& c_, const BiasField& f, Protocol p, const SimulationOptions& o)
      : c(c_),
        drive(c_, f, drive_tones(c_, f, o.pulse, p), o.pulse.steps_per_period),
        free(lab_hamiltonian(c_, f)),
        init(initial_indices(c_, o.initial_state)) {
    duration = o.pulse.duration_us > 0 ? o.pulse.duration_us
                                       : calibrate_with(c, drive, p, init, nominal_pulse_duration(o.pulse, p));
    const ComplexMatrix u1 = drive.pulse(0.0, duration);
    first.resize(drive.dim(), static_cast<Eigen::Index>(init.size()));
    for (std::size_t k = 0; k < init.size(); ++k) first.col(static_cast<Eigen::Index>(k)) = u1.col(init[k]);
  }

  ComplexMatrix full(double tau) const {
    const ComplexMatrix u1 = drive.pulse(0.0, duration);
    const ComplexMatrix u2 = drive.pulse(duration + tau, duration);
    return u2 * free(tau) * u1;
  }

  double population(double tau) const {
    const ComplexMatrix u2 = drive.pulse(duration + tau, duration);
    double p = 0;
    for (Eigen::Index k = 0; k < first.cols(); ++k) {
      const ComplexVector psi = u2 * free.apply(tau, first.col(k));
      check_norm(1.0, psi);
      p += population_zero(c, psi);
    }
    return p / static_cast<double>(first.cols());
  }
};

}  // namespace

RamseyTrace simulate_ramsey_trace(const SpeciesConstants& c, const BiasField& f, Protocol p,
                                  const std::vector<double>& tau_us, const SimulationOptions& options) {
  options.pulse.validate();
  if (tau_us.empty()) throw std::invalid_argument("simulate_ramsey_trace: empty tau grid");
  for (std::size_t i = 0; i < tau_us.size(); ++i) {
    if (tau_us[i] < 0 || tau_us[i] > 50.0) throw std::invalid_argument("simulate_ramsey_trace: tau must lie in [0, 50] us");
    if (i > 0 && !(tau_us[i] > tau_us[i - 1])) throw std::invalid_argument("simulate_ramsey_trace: tau grid must increase");
  }
  const Sequence seq(c, f, p, options);
  RamseyTrace t;
  t.tau_us = tau_us;
  t.signal.assign(tau_us.size(), 0.0);
  parallel_for(tau_us.size(), options.threads, [&](std::size_t i) { t.signal[i] = seq.population(tau_us[i]); });

  t.meta.constants = c;
  t.meta.field = f;
  t.meta.protocol = p;
  t.meta.source = "pulse_sim";
  t.meta.initial_state = options.initial_state;
  DriveSpec d;
  d.rabi_mhz = options.pulse.rabi_mhz;
  d.carrier_offset_mhz = options.pulse.carrier_offset_mhz;
  d.phase_rad = options.pulse.phase_rad;
  d.pulse_duration_us = seq.duration;
  if (options.pulse.carrier_mhz > 0) {
    d.carrier_mhz = options.pulse.carrier_mhz + options.pulse.carrier_offset_mhz;
  } else if (p != Protocol::Dq) {
    d.carrier_mhz = transition_frequencies(c, f).manifold(p == Protocol::SqPlus ? 1 : -1).mean_mhz +
                    options.pulse.carrier_offset_mhz;
  }
  t.meta.drive = d;
  return t;
}

ComplexMatrix ramsey_sequence_propagator(const SpeciesConstants& c, const BiasField& f, Protocol p, double tau_us,
                                         const SimulationOptions& options) {
  options.pulse.validate();
  const Sequence seq(c, f, p, options);
  return seq.full(tau_us);
}

// ---------------------------------------------------------------------------

CrosscheckResult crosscheck_envelope(const RamseyTrace& trace) {
  trace.validate();
  const auto& meta = trace.meta;
  const auto d = effective_field_decomposition(meta.constants, meta.field);
  const StatePair pair = state_pair(meta.protocol, d);

  CrosscheckResult r;
  r.protocol = meta.protocol;
  r.omega0_analytic = d.omega(pair.slow);
  r.omega_fast_analytic = d.omega(pair.fast);
  r.phi_analytic = relative_angle(d, pair.slow, pair.fast);
  r.chi_min_analytic = std::abs(std::cos(r.phi_analytic));

  // Off-resonant driving of the neighbouring transition leaves lines near the
  // electronic splittings; they can alias into the fringe band on coarse grids.
  const double band_mhz = 4 * units::mhz((r.omega_fast_analytic + r.omega0_analytic) / 2);
  const TonePair tones = estimate_tone_pair(trace.tau_us, trace.signal, false, band_mhz);
  const double total = tones.a_lo + tones.a_hi;
  r.beat_resolved = total > 0 && std::min(tones.a_lo, tones.a_hi) / total > 1e-4;

  EreemFitOptions opt;
  opt.fit_decay = false;
  if (r.beat_resolved) {
    opt.initial = ereem_params_from_tones(tones);
    r.fit = fit_ereem_trace(trace, opt);
  } else {
    // a single fringe tone carries no beat; hold omega0 at the model value
    const double f_tone = tones.a_lo >= tones.a_hi ? tones.f_lo_mhz : tones.f_hi_mhz;
    const double psi = tones.a_lo >= tones.a_hi ? tones.psi_lo : tones.psi_hi;
    EreemFitParams init;
    init.c0 = std::max(tones.a_lo, tones.a_hi);
    init.t2_star_us = std::numeric_limits<double>::infinity();
    init.stretch = 1;
    init.omega0 = r.omega0_analytic;
    init.omega_p1 = units::angular(2 * f_tone) + r.omega0_analytic;
    init.phi = 0.01;
    init.x0 = 0;
    init.x_p1 = psi - std::numbers::pi;
    init.offset = tones.offset;
    opt.initial = init;
    opt.fixed[EreemFitParams::Omega0] = true;
    r.fit = fit_ereem_trace(trace, opt);
  }
  const EreemFitParams& fp = r.fit.params;
  r.omega0_sim = fp.omega0;
  r.omega_fast_sim = fp.omega_p1;
  r.phi_sim = fp.phi;
  r.phi_se = r.fit.std_errors.phi;
  r.chi_min_sim = r.fit.chi_min;
  if (!r.beat_resolved) {
    // numeric envelope over windows of two fringe periods
    const double fringe = std::abs(fp.omega_p1 - fp.omega0) / 2;
    const double window = fringe > 0 ? 2 * units::two_pi / fringe : trace.tau_us.back();
    const auto ptp = sliding_peak_to_peak(trace.tau_us, trace.signal, window);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double v : ptp) {
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi > 0 && std::isfinite(lo)) r.chi_min_sim = lo / hi;
  }
  auto pct = [](double sim, double ref) { return ref != 0 ? 100.0 * (sim - ref) / ref : 0.0; };
  r.omega0_deviation_pct = pct(r.omega0_sim, r.omega0_analytic);
  r.omega_fast_deviation_pct = pct(r.omega_fast_sim, r.omega_fast_analytic);
  r.chi_min_deviation_pct = pct(r.chi_min_sim, r.chi_min_analytic);
  return r;
}

}  // namespace ereem
