#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ereem/errors.hpp"
#include "ereem/fitting.hpp"
#include "ereem/parallel.hpp"

namespace ereem {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over a seed/index combination
  std::uint64_t z = seed ^ (index + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

using Postprocess = std::function<void(Eigen::VectorXd&)>;

BootstrapResult run_bootstrap(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                              const FitResult& base, const LeastSquaresOptions& solver,
                              const BootstrapOptions& options, const Postprocess& post) {
  if (!base.converged()) throw std::invalid_argument("bootstrap requires a converged base fit");
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("bootstrap: data length mismatch");
  if (options.resamples == 0) throw std::invalid_argument("bootstrap: resample count must be positive");
  if (!(options.confidence > 0 && options.confidence < 1)) throw std::invalid_argument("bootstrap: confidence in (0,1)");

  const std::size_t n = x.size();
  const auto np = base.params.size();
  Eigen::MatrixXd all(static_cast<Eigen::Index>(options.resamples), np);
  std::vector<char> ok(options.resamples, 0);

  parallel_for(options.resamples, options.threads, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(options.seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    // sorted draws keep the abscissa ordered, which some models assume
    std::sort(idx.begin(), idx.end());
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = x[idx[k]];
      ys[k] = y[idx[k]];
    }
    try {
      FitResult f = least_squares_fit(model, xs, ys, base.params, solver);
      if (!f.converged() || !f.params.allFinite()) return;
      if (post) post(f.params);
      all.row(static_cast<Eigen::Index>(r)) = f.params.transpose();
      ok[r] = 1;
    } catch (const std::exception&) {
    }
  });

  BootstrapResult out;
  out.resamples = options.resamples;
  out.names = base.names;
  std::size_t good = 0;
  for (char c : ok) good += c ? 1 : 0;
  out.failures = options.resamples - good;
  out.estimates.resize(static_cast<Eigen::Index>(good), np);
  for (std::size_t r = 0, k = 0; r < options.resamples; ++r) {
    if (ok[r]) out.estimates.row(static_cast<Eigen::Index>(k++)) = all.row(static_cast<Eigen::Index>(r));
  }
  out.z = normal_two_sided_z(options.confidence);
  out.point = base.params;
  out.std_error = Eigen::VectorXd::Zero(np);
  out.percentile_lo = out.percentile_hi = out.standard_lo = out.standard_hi = base.params;
  out.normality_fraction = Eigen::VectorXd::Zero(np);
  out.valid = good >= 2 && static_cast<double>(out.failures) <=
                               BootstrapOptions::max_failure_fraction * static_cast<double>(options.resamples);
  if (good < 2) return out;

  const double alpha = 1 - options.confidence;
  for (Eigen::Index j = 0; j < np; ++j) {
    const Eigen::VectorXd col = out.estimates.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(good - 1));
    out.std_error[j] = sd;
    std::vector<double> s(col.data(), col.data() + col.size());
    std::sort(s.begin(), s.end());
    out.percentile_lo[j] = quantile_sorted(s, alpha / 2);
    out.percentile_hi[j] = quantile_sorted(s, 1 - alpha / 2);
    out.standard_lo[j] = out.point[j] - out.z * sd;
    out.standard_hi[j] = out.point[j] + out.z * sd;
    std::size_t inside = 0;
    for (double v : s) inside += (v >= out.standard_lo[j] && v <= out.standard_hi[j]) ? 1 : 0;
    out.normality_fraction[j] = static_cast<double>(inside) / static_cast<double>(good);
  }
  return out;
}

}  // namespace

BootstrapResult bootstrap_confidence(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                                     const FitResult& base, const LeastSquaresOptions& solver,
                                     const BootstrapOptions& options) {
  return run_bootstrap(model, x, y, base, solver, options, {});
}

BootstrapResult bootstrap_ereem(const RamseyTrace& trace, const EreemFitResult& base, const BootstrapOptions& options,
                                const EreemFitOptions& fit_options) {
  using I = EreemFitParams;
  const double inf = std::numeric_limits<double>::infinity();
  LeastSquaresOptions so = fit_options.solver;
  so.fixed = base.fit.fixed;
  if (!so.lower) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(I::count, -inf);
    lo[I::C0] = 0;
    lo[I::T2Star] = 1e-6;
    lo[I::Stretch] = 0.1;
    lo[I::Omega0] = 0;
    lo[I::OmegaP1] = 0;
    so.lower = lo;
  }
  if (!so.upper) {
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(I::count, inf);
    hi[I::Stretch] = 10;
    so.upper = hi;
  }
  const Eigen::VectorXd ref = base.fit.params;
  // keep each resample on the base fit's branch of the (x0, x1, Phi) symmetries
  auto post = [ref](Eigen::VectorXd& v) {
    v[I::Phi] = std::abs(std::remainder(v[I::Phi], 2 * M_PI));
    for (auto k : {I::X0, I::XP1}) v[k] = ref[k] + std::remainder(v[k] - ref[k], 2 * M_PI);
  };
  return run_bootstrap(ereem_curve_model(), trace.tau_us, trace.signal, base.fit, so, options, post);
}

}  // namespace ereem
