#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ereem/errors.hpp"
#include "ereem/fitting.hpp"
#include "ereem/spectrum.hpp"
#include "ereem/units.hpp"

namespace ereem {

namespace {

constexpr double kPi = std::numbers::pi;
const double kInf = std::numeric_limits<double>::infinity();

double wrap_pi(double a) {  // (-pi, pi]
  a = std::remainder(a, 2 * kPi);
  return a <= -kPi ? a + 2 * kPi : a;
}

/// Linear least squares of signal on [1, w cos(2 pi f_k tau), w sin(2 pi f_k tau)].
struct ToneSolve {
  Eigen::VectorXd coef;  // offset, then (cos, sin) per tone
  double rss = kInf;
};

ToneSolve solve_tones(std::span<const double> tau, std::span<const double> y, std::span<const double> freqs_mhz,
                      double t2_star_us, double stretch = 1) {
  const auto nt = static_cast<Eigen::Index>(freqs_mhz.size());
  const Eigen::Index cols = 1 + 2 * nt;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd row(cols);
  double yy = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    double w = 1;
    if (!std::isinf(t2_star_us)) w = std::exp(stretch == 1 ? -tau[i] / t2_star_us : -std::pow(tau[i] / t2_star_us, stretch));
    row[0] = 1;
    for (Eigen::Index k = 0; k < nt; ++k) {
      const double ph = units::two_pi * freqs_mhz[static_cast<std::size_t>(k)] * tau[i];
      row[1 + 2 * k] = w * std::cos(ph);
      row[2 + 2 * k] = w * std::sin(ph);
    }
    ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
    aty += row * y[i];
    yy += y[i] * y[i];
  }
  ata = ata.selfadjointView<Eigen::Lower>();
  ToneSolve s;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success) return s;
  // reject nearly collinear tone sets
  const Eigen::VectorXd dvec = ldlt.vectorD();
  if (dvec.minCoeff() <= 1e-10 * dvec.maxCoeff()) return s;
  s.coef = ldlt.solve(aty);
  s.rss = std::max(0.0, yy - 2 * s.coef.dot(aty) + s.coef.dot(ata * s.coef));
  return s;
}

void amplitude_phase(double a, double b, double& amp, double& psi) {
  // a cos + b sin = amp cos(x + psi)
  amp = std::hypot(a, b);
  psi = std::atan2(-b, a);
}

template <class Cost>
void pattern_search(std::vector<double>& x, double step, double min_step, Cost&& cost, double& best) {
  while (step > min_step) {
    bool moved = false;
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (double dir : {+1.0, -1.0}) {
        std::vector<double> trial = x;
        trial[j] += dir * step;
        double c = cost(trial);
        if (c < best) {
          // keep going while it pays, doubling the stride
          double stride = 2 * step;
          while (c < best) {
            best = c;
            x = trial;
            trial[j] += dir * stride;
            stride *= 2;
            c = cost(trial);
          }
          moved = true;
          break;
        }
      }
    }
    if (!moved) step /= 2;
  }
}

}  // namespace

TonePair estimate_tone_pair(std::span<const double> tau, std::span<const double> y, bool fit_decay,
                            double max_frequency_mhz) {
  if (tau.size() != y.size() || tau.size() < 16) throw std::invalid_argument("tone estimate: need >= 16 samples");
  Periodogram pg = periodogram(tau, y, 8);
  for (std::size_t i = 0; i < pg.frequency_mhz.size(); ++i) {
    if (pg.frequency_mhz[i] > max_frequency_mhz) pg.power[i] = 0;
  }
  const auto peaks = find_peaks(pg, 8, 1e-6);
  if (peaks.empty()) throw NumericalError("tone estimate: trace has no oscillating content");
  const double res = pg.resolution_mhz;
  const double nyquist = pg.frequency_mhz.back();

  // x = {f1, f2, 1/T2*, p}; a zero rate means no decay
  auto rss = [&](const std::vector<double>& x) {
    const double f1 = x[0], f2 = x[1];
    if (f1 <= 0 || f2 <= 0 || f1 >= nyquist || f2 >= nyquist || std::abs(f1 - f2) < 0.02 * res) return kInf;
    if (x[2] < 0 || x[3] < 0.3 || x[3] > 4) return kInf;
    const double f[2] = {f1, f2};
    return solve_tones(tau, y, f, x[2] > 0 ? 1.0 / x[2] : kInf, x[3]).rss;
  };

  // Two close tones can mimic a decaying envelope, so the decay is profiled
  // together with the pair. Candidates from separate peaks and from a single
  // lobe are refined independently before they are compared.
  const double span = tau.back() - tau.front();
  std::vector<double> rate_grid{0};
  if (fit_decay) {
    for (double s : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0}) rate_grid.push_back(1.0 / (s * span));
  }

  struct Candidate {
    std::vector<double> x;
    double cost = kInf;
  };
  auto consider = [&](Candidate& c, double f1, double f2) {
    for (double rate : rate_grid) {
      std::vector<double> x{f1, f2, rate, 1.0};
      const double v = rss(x);
      if (v < c.cost) {
        c.cost = v;
        c.x = x;
      }
    }
  };
  const double main = peaks[0].frequency_mhz;
  Candidate separate, shared;
  for (std::size_t q = 1; q < peaks.size(); ++q) {
    const double fq = peaks[q].frequency_mhz;
    if (std::abs(fq - main) < 0.5 * res) continue;
    for (int a = -5; a <= 5; ++a) {
      for (int b = -5; b <= 5; ++b) consider(separate, main + 0.1 * a * res, fq + 0.1 * b * res);
    }
  }
  for (int a = -15; a <= 15; ++a) {
    for (int b = a + 1; b <= 15; ++b) consider(shared, main + 0.1 * a * res, main + 0.1 * b * res);
  }

  Candidate best;
  for (Candidate* c : {&separate, &shared}) {
    if (!std::isfinite(c->cost)) continue;
    if (c->x[2] > 0) {
      // the rate and stretch steps are scaled to the frequency resolution
      std::vector<double> z{c->x[0], c->x[1], c->x[2], c->x[3] * res};
      // a coarse optimum is enough for the damped solver that follows
      pattern_search(z, 0.02 * res, 1e-4 * res,
                     [&](const std::vector<double>& v) { return rss({v[0], v[1], v[2], v[3] / res}); }, c->cost);
      c->x = {z[0], z[1], z[2], z[3] / res};
    } else {
      std::vector<double> z{c->x[0], c->x[1]};
      pattern_search(z, 0.02 * res, 1e-4 * res, [&](const std::vector<double>& v) { return rss({v[0], v[1], 0, 1}); },
                     c->cost);
      c->x = {z[0], z[1], 0, 1};
    }
    if (c->cost < best.cost) best = *c;
  }
  if (!std::isfinite(best.cost)) throw NumericalError("tone estimate: no resolvable tone pair");
  if (best.x[0] > best.x[1]) std::swap(best.x[0], best.x[1]);

  TonePair t;
  t.f_lo_mhz = best.x[0];
  t.f_hi_mhz = best.x[1];
  if (fit_decay) {
    t.t2_star_us = best.x[2] > 0 ? 1.0 / best.x[2] : 10 * span;
    t.stretch = best.x[2] > 0 ? best.x[3] : 1.0;
  }
  const double f[2] = {t.f_lo_mhz, t.f_hi_mhz};
  const ToneSolve s = solve_tones(tau, y, f, t.t2_star_us, t.stretch);
  if (!std::isfinite(s.rss)) throw NumericalError("tone estimate: degenerate tone pair");
  t.offset = s.coef[0];
  amplitude_phase(s.coef[1], s.coef[2], t.a_lo, t.psi_lo);
  amplitude_phase(s.coef[3], s.coef[4], t.a_hi, t.psi_hi);
  t.rss = s.rss;
  return t;
}

EreemFitParams ereem_params_from_tones(const TonePair& t) {
  EreemFitParams p;
  p.c0 = t.a_lo + t.a_hi;
  const double c = p.c0 > 0 ? std::clamp((t.a_lo - t.a_hi) / p.c0, -0.999, 0.999) : 0.0;
  p.phi = std::acos(c);
  p.x0 = wrap_pi((t.psi_hi - t.psi_lo) / 2);
  p.x_p1 = wrap_pi((t.psi_hi + t.psi_lo) / 2 - kPi);
  p.omega0 = units::angular(t.f_hi_mhz - t.f_lo_mhz);
  p.omega_p1 = units::angular(t.f_hi_mhz + t.f_lo_mhz);
  p.t2_star_us = t.t2_star_us;
  p.stretch = t.stretch;
  p.offset = t.offset;
  return p;
}

EreemFitParams initial_ereem_guess(std::span<const double> tau, std::span<const double> y, bool fit_decay) {
  EreemFitParams p = ereem_params_from_tones(estimate_tone_pair(tau, y, fit_decay));
  if (!fit_decay) p.t2_star_us = kInf;
  return p;
}

namespace {

void canonicalize(Eigen::VectorXd& v, Eigen::VectorXd& se, Eigen::MatrixXd& cov) {
  using I = EreemFitParams;
  if (v[I::Omega0] > v[I::OmegaP1]) {
    // the model is symmetric under exchanging the two (omega, phase) pairs
    for (auto [a, b] : {std::pair{I::Omega0, I::OmegaP1}, std::pair{I::X0, I::XP1}}) {
      std::swap(v[a], v[b]);
      std::swap(se[a], se[b]);
      cov.row(a).swap(cov.row(b));
      cov.col(a).swap(cov.col(b));
    }
  }
  v[I::Phi] = std::abs(wrap_pi(v[I::Phi]));
  // (x0, x1) and (x0 + pi, x1 + pi) describe the same signal
  double x0 = wrap_pi(v[I::X0]);
  double x1 = v[I::XP1];
  if (x0 > kPi / 2) {
    x0 -= kPi;
    x1 -= kPi;
  } else if (x0 <= -kPi / 2) {
    x0 += kPi;
    x1 += kPi;
  }
  v[I::X0] = x0;
  v[I::XP1] = wrap_pi(x1);
}

}  // namespace

EreemFitResult fit_ereem_trace(const RamseyTrace& trace, const EreemFitOptions& opt) {
  trace.validate();
  using I = EreemFitParams;
  EreemFitParams init = opt.initial ? *opt.initial : initial_ereem_guess(trace.tau_us, trace.signal, opt.fit_decay);
  std::vector<bool> fixed(opt.fixed.begin(), opt.fixed.end());
  if (!opt.fit_decay) {
    init.t2_star_us = kInf;
    fixed[I::T2Star] = true;
    fixed[I::Stretch] = true;
  }
  LeastSquaresOptions so = opt.solver;
  so.fixed = fixed;
  if (!so.lower) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(I::count, -kInf);
    lo[I::C0] = 0;
    lo[I::T2Star] = 1e-6;
    lo[I::Stretch] = 0.1;
    lo[I::Omega0] = 0;
    lo[I::OmegaP1] = 0;
    so.lower = lo;
  }
  if (!so.upper) {
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(I::count, kInf);
    hi[I::Stretch] = 10;
    so.upper = hi;
  }
  Eigen::VectorXd p0 = init.to_vector();
  for (Eigen::Index j = 0; j < p0.size(); ++j) {
    if (!fixed[static_cast<std::size_t>(j)]) p0[j] = std::clamp(p0[j], (*so.lower)[j], (*so.upper)[j]);
  }

  EreemFitResult out;
  out.fit = least_squares_fit(ereem_curve_model(), trace.tau_us, trace.signal, p0, so);
  if (out.fit.status == FitStatus::MaxIterations || out.fit.status == FitStatus::NonFinite) {
    throw NumericalError("EREEM fit did not converge (" + to_string(out.fit.status) + ")");
  }
  canonicalize(out.fit.params, out.fit.std_errors, out.fit.covariance);
  out.params = EreemFitParams::from_vector(out.fit.params);
  out.std_errors = EreemFitParams::from_vector(out.fit.std_errors);
  if (!(out.params.omega_p1 - out.params.omega0 > 1e-9 * std::max(1.0, out.params.omega_p1))) {
    throw NumericalError("EREEM fit collapsed onto omega0 == omega_p1");
  }
  out.chi_min = std::abs(std::cos(out.params.phi));
  out.chi_min_se = std::abs(std::sin(out.params.phi)) * out.std_errors.phi;
  out.omega0_mhz = units::mhz(out.params.omega0);
  out.omega0_mhz_se = units::mhz(out.std_errors.omega0);
  return out;
}

// ---------------------------------------------------------------------------

FourToneFitResult fit_four_tone(const RamseyTrace& trace, double delta_a, double delta_b, double omega0_guess,
                                bool fit_decay) {
  trace.validate();
  if (!four_tone_resolvable(delta_a, delta_b, omega0_guess)) {
    std::ostringstream msg;
    msg << "four-tone fit refused: ||delta_a| - |delta_b|| = "
        << units::mhz(std::abs(std::abs(delta_a) - std::abs(delta_b))) << " MHz is below "
        << kFourToneResolvability << " x omega0 = " << units::mhz(kFourToneResolvability * omega0_guess)
        << " MHz; the tones cannot be assigned unambiguously";
    throw std::invalid_argument(msg.str());
  }
  const auto& tau = trace.tau_us;
  const auto& y = trace.signal;
  const double res = units::angular(1.0 / (tau.back() - tau.front()));

  auto freqs = [](const std::vector<double>& v) {
    FourToneParams p;
    p.delta_a = v[0];
    p.delta_b = v[1];
    p.omega0 = v[2];
    std::array<double, 4> f = p.tone_frequencies();
    for (double& x : f) x = units::mhz(x);
    return f;
  };
  auto cost = [&](const std::vector<double>& v, double t2) {
    if (v[2] <= 0) return kInf;
    const auto f = freqs(v);
    for (double x : f) {
      if (x <= 0) return kInf;
    }
    return solve_tones(tau, y, f, t2).rss;
  };
  std::vector<double> v{std::abs(delta_a), std::abs(delta_b), omega0_guess};
  double best = cost(v, kInf);
  if (!std::isfinite(best)) throw NumericalError("four-tone fit: initial tones are degenerate");
  pattern_search(v, 0.1 * res, 1e-7 * res, [&](const std::vector<double>& q) { return cost(q, kInf); }, best);

  double t2 = kInf;
  if (fit_decay) {
    const double span = tau.back() - tau.front();
    double best_t2 = kInf;
    for (double s : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0, 10.0}) {
      const double c = cost(v, s * span);
      if (c < best_t2) {
        best_t2 = c;
        t2 = s * span;
      }
    }
  }
  const auto f = freqs(v);
  const ToneSolve s = solve_tones(tau, y, f, t2);
  if (!std::isfinite(s.rss)) throw NumericalError("four-tone fit: degenerate tone set");

  FourToneParams init;
  init.delta_a = v[0];
  init.delta_b = v[1];
  init.omega0 = v[2];
  for (int k = 0; k < 4; ++k) amplitude_phase(s.coef[1 + 2 * k], s.coef[2 + 2 * k], init.amplitude[k], init.phase[k]);
  init.t2_star_us = t2;
  init.stretch = 1;
  init.offset = s.coef[0];

  using I = FourToneParams;
  LeastSquaresOptions so;
  std::vector<bool> fixed(I::count, false);
  if (!fit_decay) {
    fixed[I::T2Star] = true;
    fixed[I::Stretch] = true;
  }
  so.fixed = fixed;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(I::count, -kInf);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(I::count, kInf);
  lo[I::Omega0] = 0;
  for (int k = 0; k < 4; ++k) lo[I::Amp1 + k] = 0;
  lo[I::T2Star] = 1e-6;
  lo[I::Stretch] = 0.1;
  hi[I::Stretch] = 10;
  so.lower = lo;
  so.upper = hi;

  FourToneFitResult out;
  out.fit = least_squares_fit(four_tone_curve_model(), tau, y, init.to_vector(), so);
  if (out.fit.status == FitStatus::MaxIterations || out.fit.status == FitStatus::NonFinite) {
    throw NumericalError("four-tone fit did not converge (" + to_string(out.fit.status) + ")");
  }
  for (int k = 0; k < 4; ++k) out.fit.params[I::Phase1 + k] = wrap_pi(out.fit.params[I::Phase1 + k]);
  out.params = FourToneParams::from_vector(out.fit.params);
  out.std_errors = FourToneParams::from_vector(out.fit.std_errors);
  out.omega0_mhz = units::mhz(out.params.omega0);
  out.omega0_mhz_se = units::mhz(out.std_errors.omega0);
  return out;
}

// ---------------------------------------------------------------------------

OdmrFit fit_double_lorentzian(std::span<const double> nu, std::span<const double> y) {
  if (nu.size() != y.size() || nu.size() < 10) throw std::invalid_argument("ODMR fit: need >= 10 samples");
  for (std::size_t i = 1; i < nu.size(); ++i) {
    if (!(nu[i] > nu[i - 1])) throw std::invalid_argument("ODMR fit: frequency grid must increase");
  }
  const std::size_t n = y.size();
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double baseline = sorted[static_cast<std::size_t>(0.9 * static_cast<double>(n - 1))];
  std::vector<double> depth(n);
  for (std::size_t i = 0; i < n; ++i) depth[i] = baseline - y[i];

  const auto i1 = static_cast<std::size_t>(std::max_element(depth.begin(), depth.end()) - depth.begin());
  const double d1 = depth[i1];
  if (!(d1 > 0)) throw NumericalError("ODMR fit: no resonance dip found");
  std::size_t l = i1, r = i1;
  while (l > 0 && depth[l] > d1 / 2) --l;
  while (r + 1 < n && depth[r] > d1 / 2) ++r;
  const double w1 = std::max(nu[r] - nu[l], 2 * (nu[1] - nu[0]));

  std::size_t i2 = n;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (std::abs(nu[i] - nu[i1]) < w1) continue;
    if (depth[i] < depth[i - 1] || depth[i] < depth[i + 1]) continue;
    if (i2 == n || depth[i] > depth[i2]) i2 = i;
  }
  if (i2 == n || depth[i2] < 0.1 * d1) {
    throw NumericalError("ODMR fit: only one resonance line is resolved; a doublet is required");
  }

  Eigen::VectorXd p0(7);
  // area-normalized contrast: peak depth = 2 C / (pi Gamma)
  p0 << baseline, d1 * kPi * w1 / 2, w1, nu[i1], depth[i2] * kPi * w1 / 2, w1, nu[i2];
  LeastSquaresOptions so;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(7, -kInf);
  lo[1] = 0;
  lo[2] = 1e-9;
  lo[4] = 0;
  lo[5] = 1e-9;
  so.lower = lo;
  OdmrFit out;
  out.fit = least_squares_fit(double_lorentzian_model(), nu, y, p0, so);
  if (!out.fit.converged()) throw NumericalError("ODMR fit did not converge (" + to_string(out.fit.status) + ")");
  Eigen::VectorXd& p = out.fit.params;
  int a = 0, b = 1;
  if (p[3] > p[6]) std::swap(a, b);
  out.offset = p[0];
  for (int i : {a, b}) {
    const int slot = i == a ? 0 : 1;
    out.contrast[slot] = p[1 + 3 * i];
    out.width_mhz[slot] = p[2 + 3 * i];
    out.center_mhz[slot] = p[3 + 3 * i];
    out.center_se_mhz[slot] = out.fit.std_errors[3 + 3 * i];
  }
  out.nu_star_mhz = 0.5 * (out.center_mhz[0] + out.center_mhz[1]);
  const double var = out.fit.covariance(3, 3) + out.fit.covariance(6, 6) + 2 * out.fit.covariance(3, 6);
  out.nu_star_se_mhz = 0.5 * std::sqrt(std::max(0.0, var));
  return out;
}

// ---------------------------------------------------------------------------

HyperfineRefit refit_transverse_hyperfine(double magnitude_g, std::span<const double> theta,
                                          std::span<const double> omega0_data, const SpeciesConstants& c) {
  if (theta.size() != omega0_data.size()) throw std::invalid_argument("A_perp refit: length mismatch");
  if (theta.size() < 3) throw std::invalid_argument("A_perp refit: need at least three angle points");
  if (c.quadrupole_mhz != 0) throw std::invalid_argument("A_perp refit: the closed-form omega0 requires Q = 0");
  double max_s = 0;
  for (double t : theta) max_s = std::max(max_s, std::abs(std::sin(t)));
  if (max_s < 1e-9) throw std::invalid_argument("A_perp refit: all angles are zero, A_perp is unidentifiable");

  const double scale = units::angular(std::abs(c.gamma_n_mhz_per_g)) * magnitude_g;
  const double dk_da = c.gamma_e_mhz_per_g / (c.gamma_n_mhz_per_g * c.zero_field_mhz);
  CurveModel m;
  m.parameter_count = 1;
  m.names = {"A_perp_mhz"};
  m.value = [=](const Eigen::VectorXd& p, double th) {
    const double k = dk_da * p[0], s = std::sin(th);
    return scale * std::sqrt(1 + 4 * (k * k - k) * s * s);
  };
  m.gradient = [=](const Eigen::VectorXd& p, double th, Eigen::Ref<Eigen::VectorXd> g) {
    const double k = dk_da * p[0], s2 = std::sin(th) * std::sin(th);
    const double root = std::sqrt(1 + 4 * (k * k - k) * s2);
    g[0] = scale * 4 * (2 * k - 1) * s2 * dk_da / (2 * root);
  };
  Eigen::VectorXd p0(1);
  p0 << c.a_perp_mhz;
  HyperfineRefit out;
  out.fit = least_squares_fit(m, theta, omega0_data, p0);
  if (!out.fit.converged()) throw NumericalError("A_perp refit did not converge");
  out.a_perp_mhz = out.fit.params[0];
  out.a_perp_se_mhz = out.fit.std_errors[0];
  const double z = normal_two_sided_z(0.95);
  out.ci_lo_mhz = out.a_perp_mhz - z * out.a_perp_se_mhz;
  out.ci_hi_mhz = out.a_perp_mhz + z * out.a_perp_se_mhz;
  return out;
}

double transverse_hyperfine_from_omega0(double magnitude_g, double theta, double omega0_value,
                                        const SpeciesConstants& c) {
  if (c.quadrupole_mhz != 0) throw std::invalid_argument("A_perp inversion requires Q = 0");
  const double s2 = std::sin(theta) * std::sin(theta);
  if (s2 < 1e-18) throw std::invalid_argument("A_perp inversion: theta = 0 carries no A_perp information");
  const double ratio = omega0_value / (units::angular(std::abs(c.gamma_n_mhz_per_g)) * magnitude_g);
  const double x = (ratio * ratio - 1) / (4 * s2);  // kappa^2 - kappa
  if (1 + 4 * x < 0) throw std::invalid_argument("A_perp inversion: omega0 below the kappa = 1/2 minimum");
  const double k = 0.5 * (1 + std::sqrt(1 + 4 * x));
  return k * c.gamma_n_mhz_per_g * c.zero_field_mhz / c.gamma_e_mhz_per_g;
}

}  // namespace ereem
