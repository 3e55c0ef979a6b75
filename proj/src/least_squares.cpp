#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ereem/errors.hpp"
#include "ereem/fitting.hpp"

namespace ereem {

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max_iterations";
    case FitStatus::Singular: return "singular";
    case FitStatus::NonFinite: return "non_finite";
  }
  return "?";
}

namespace {

struct Problem {
  const CurveModel& model;
  std::span<const double> x, y;
  std::vector<Eigen::Index> free;

  // r = f - y; J has one column per free parameter
  bool evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    const auto n = static_cast<Eigen::Index>(x.size());
    r.resize(n);
    if (jac) jac->resize(n, static_cast<Eigen::Index>(free.size()));
    Eigen::VectorXd g(p.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      r[i] = model.value(p, x[i]) - y[i];
      if (!std::isfinite(r[i])) return false;
      if (!jac) continue;
      if (model.gradient) {
        model.gradient(p, x[i], g);
      } else {
        numeric_gradient(p, x[i], g);
      }
      for (std::size_t j = 0; j < free.size(); ++j) (*jac)(i, static_cast<Eigen::Index>(j)) = g[free[j]];
    }
    return jac ? jac->allFinite() : true;
  }

  void numeric_gradient(const Eigen::VectorXd& p, double xi, Eigen::VectorXd& g) const {
    Eigen::VectorXd q = p;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = 6e-6 * std::max(1.0, std::abs(p[j]));
      q[j] = p[j] + h;
      const double fp = model.value(q, xi);
      q[j] = p[j] - h;
      const double fm = model.value(q, xi);
      q[j] = p[j];
      g[j] = (fp - fm) / (2 * h);
    }
  }
};

}  // namespace

FitResult least_squares_fit(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                            const Eigen::VectorXd& initial, const LeastSquaresOptions& opt) {
  const std::size_t k = model.parameter_count;
  if (!model.value) throw std::invalid_argument("least_squares_fit: model has no value function");
  if (static_cast<std::size_t>(initial.size()) != k) throw std::invalid_argument("least_squares_fit: initial guess size");
  if (x.size() != y.size()) throw std::invalid_argument("least_squares_fit: x and y lengths differ");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("least_squares_fit: non-finite data");
  }
  if (!opt.fixed.empty() && opt.fixed.size() != k) throw std::invalid_argument("least_squares_fit: fixed mask size");

  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd lower = opt.lower.value_or(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), -inf));
  const Eigen::VectorXd upper = opt.upper.value_or(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), inf));

  Problem prob{model, x, y, {}};
  std::vector<bool> fixed(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    fixed[j] = !opt.fixed.empty() && opt.fixed[j];
    if (fixed[j]) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    if (!(initial[jj] >= lower[jj] && initial[jj] <= upper[jj])) {
      std::ostringstream msg;
      msg << "least_squares_fit: initial value of parameter " << j << " (" << initial[jj] << ") outside bounds";
      throw std::invalid_argument(msg.str());
    }
    prob.free.push_back(jj);
  }
  const auto m = static_cast<Eigen::Index>(prob.free.size());
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < m) throw std::invalid_argument("least_squares_fit: fewer observations than free parameters");

  FitResult res;
  res.names = model.names;
  res.fixed = fixed;
  res.observations = x.size();
  Eigen::VectorXd p = initial;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!prob.evaluate(p, r, &jac)) {
    res.params = p;
    res.status = FitStatus::NonFinite;
    return res;
  }
  double cost = 0.5 * r.squaredNorm();

  auto clamp = [&](Eigen::VectorXd& q) {
    for (Eigen::Index j : prob.free) q[j] = std::clamp(q[j], lower[j], upper[j]);
  };

  double lambda = opt.initial_damping;
  double nu = 2;
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(m);
  FitStatus status = FitStatus::MaxIterations;
  int it = 0;
  for (; it < opt.max_iterations && m > 0; ++it) {
    const Eigen::VectorXd g = jac.transpose() * r;
    const Eigen::MatrixXd a = jac.transpose() * jac;

    double pg = 0;  // projected gradient, inf-norm
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index pj = prob.free[static_cast<std::size_t>(j)];
      double gj = g[j];
      if ((p[pj] <= lower[pj] && gj > 0) || (p[pj] >= upper[pj] && gj < 0)) gj = 0;
      pg = std::max(pg, std::abs(gj));
    }
    if (cost == 0 || pg <= opt.gradient_tolerance * (1 + cost)) {
      status = FitStatus::Converged;
      break;
    }
    for (Eigen::Index j = 0; j < m; ++j) scale[j] = std::max(scale[j], a(j, j));

    bool accepted = false, stalled = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index j = 0; j < m; ++j) damped(j, j) += lambda * std::max(scale[j], 1e-300);
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      Eigen::VectorXd q = p;
      for (Eigen::Index j = 0; j < m; ++j) q[prob.free[static_cast<std::size_t>(j)]] += delta[j];
      clamp(q);
      Eigen::VectorXd step(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index pj = prob.free[static_cast<std::size_t>(j)];
        step[j] = q[pj] - p[pj];
      }
      double pnorm = 0;
      for (Eigen::Index j : prob.free) pnorm += p[j] * p[j];
      if (!delta.allFinite() || step.norm() <= opt.step_tolerance * (std::sqrt(pnorm) + opt.step_tolerance)) {
        stalled = true;
        break;
      }
      Eigen::VectorXd rq;
      const bool ok = prob.evaluate(q, rq, nullptr);
      const double cost_q = ok ? 0.5 * rq.squaredNorm() : inf;
      const double predicted = -(step.dot(g) + 0.5 * step.dot(a * step));
      const double rho = predicted > 0 ? (cost - cost_q) / predicted : (cost_q < cost ? 1.0 : -1.0);
      if (ok && cost_q < cost && rho > 0) {
        p = q;
        cost = cost_q;
        if (!prob.evaluate(p, r, &jac)) {
          res.params = p;
          res.status = FitStatus::NonFinite;
          return res;
        }
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2 * rho - 1, 3));
        nu = 2;
        accepted = true;
      } else {
        lambda *= nu;
        nu *= 2;
        if (lambda > 1e30) {
          stalled = true;
          break;
        }
      }
    }
    if (stalled) {
      // no representable step lowers the cost: a minimum to working precision
      status = FitStatus::Converged;
      ++it;
      break;
    }
  }
  if (m == 0) status = FitStatus::Converged;

  res.params = p;
  res.cost = cost;
  res.residual_norm = std::sqrt(2 * cost);
  res.iterations = it;
  res.status = status;
  const Eigen::Index dof = n - m;
  res.residual_variance = dof > 0 ? 2 * cost / static_cast<double>(dof) : 0.0;

  res.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  res.std_errors = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  if (m > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0;
    const double smin = s.size() ? s[s.size() - 1] : 0;
    res.condition_number = smin > 0 ? smax / smin : inf;
    const double tol = 1e-14 * smax;
    const Eigen::MatrixXd v = svd.matrixV();
    Eigen::MatrixXd cov_free = Eigen::MatrixXd::Zero(m, m);
    std::vector<bool> unidentified(static_cast<std::size_t>(m), false);
    for (Eigen::Index q = 0; q < s.size(); ++q) {
      if (s[q] > tol) {
        cov_free += v.col(q) * v.col(q).transpose() / (s[q] * s[q]);
      } else {
        for (Eigen::Index j = 0; j < m; ++j) {
          if (std::abs(v(j, q)) > 1e-6) unidentified[static_cast<std::size_t>(j)] = true;
        }
      }
    }
    cov_free *= res.residual_variance;
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        res.covariance(prob.free[static_cast<std::size_t>(a)], prob.free[static_cast<std::size_t>(b)]) = cov_free(a, b);
      }
      const Eigen::Index pa = prob.free[static_cast<std::size_t>(a)];
      res.std_errors[pa] = unidentified[static_cast<std::size_t>(a)] ? inf : std::sqrt(std::max(0.0, cov_free(a, a)));
    }
    if (res.status == FitStatus::Converged && !(smin > tol)) res.status = FitStatus::Singular;
  }
  return res;
}

// ---------------------------------------------------------------------------

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  // rational approximation, then one Halley step on erfc
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double xq;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    xq = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5, r = q * q;
    xq = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    xq = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-xq / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(xq * xq / 2);
  return xq - u / (1 + xq * u / 2);
}

double normal_two_sided_z(double confidence) {
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must lie in (0, 1)");
  return normal_quantile(0.5 + confidence / 2);
}

// ---------------------------------------------------------------------------
// Model factories

CurveModel sine_model() {
  CurveModel m;
  m.parameter_count = 4;
  m.names = {"y0", "A", "omega", "phase"};
  m.value = [](const Eigen::VectorXd& p, double x) { return p[0] + p[1] * std::sin(p[2] * x + p[3]); };
  m.gradient = [](const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
    const double s = std::sin(p[2] * x + p[3]), c = std::cos(p[2] * x + p[3]);
    g[0] = 1;
    g[1] = s;
    g[2] = p[1] * x * c;
    g[3] = p[1] * c;
  };
  return m;
}

CurveModel ereem_curve_model() {
  CurveModel m;
  m.parameter_count = EreemFitParams::count;
  m.names.assign(EreemFitParams::names().begin(), EreemFitParams::names().end());
  m.value = [](const Eigen::VectorXd& p, double x) { return ereem_fit_model(EreemFitParams::from_vector(p), x); };
  m.gradient = [](const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
    ereem_fit_gradient(EreemFitParams::from_vector(p), x, g);
  };
  return m;
}

CurveModel four_tone_curve_model() {
  CurveModel m;
  m.parameter_count = FourToneParams::count;
  m.names.assign(FourToneParams::names().begin(), FourToneParams::names().end());
  m.value = [](const Eigen::VectorXd& p, double x) { return four_tone_model(FourToneParams::from_vector(p), x); };
  m.gradient = [](const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
    four_tone_gradient(FourToneParams::from_vector(p), x, g);
  };
  return m;
}

double double_lorentzian(double offset, const std::array<double, 2>& contrast, const std::array<double, 2>& width,
                         const std::array<double, 2>& center, double nu) {
  double y = offset;
  for (int i = 0; i < 2; ++i) {
    const double hw = width[i] / 2;
    const double dnu = nu - center[i];
    y -= contrast[i] / std::numbers::pi * hw / (dnu * dnu + hw * hw);
  }
  return y;
}

CurveModel double_lorentzian_model() {
  CurveModel m;
  m.parameter_count = 7;
  m.names = {"A", "C1", "Gamma1", "nu1", "C2", "Gamma2", "nu2"};
  m.value = [](const Eigen::VectorXd& p, double x) {
    return double_lorentzian(p[0], {p[1], p[4]}, {p[2], p[5]}, {p[3], p[6]}, x);
  };
  m.gradient = [](const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> g) {
    constexpr double pi = std::numbers::pi;
    g[0] = 1;
    for (int i = 0; i < 2; ++i) {
      const double c = p[1 + 3 * i], w = p[2 + 3 * i], nu = p[3 + 3 * i];
      const double hw = w / 2, d = x - nu;
      const double den = d * d + hw * hw;
      g[1 + 3 * i] = -hw / (pi * den);
      g[2 + 3 * i] = -c * (d * d - hw * hw) / (2 * pi * den * den);
      g[3 + 3 * i] = -c * 2 * d * hw / (pi * den * den);
    }
  };
  return m;
}

}  // namespace ereem
