#include "ereem/spectrum.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ereem {

bool is_uniform_grid(std::span<const double> tau, double rel_tol) {
  if (tau.size() < 2) return false;
  const double step = (tau.back() - tau.front()) / static_cast<double>(tau.size() - 1);
  if (!(step > 0)) return false;
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (std::abs(tau[i] - tau[i - 1] - step) > rel_tol * step) return false;
  }
  return true;
}

Periodogram periodogram(std::span<const double> tau, std::span<const double> signal, int pad_factor) {
  if (tau.size() != signal.size()) throw std::invalid_argument("periodogram: length mismatch");
  if (!is_uniform_grid(tau)) throw std::invalid_argument("periodogram: tau grid must be uniform");
  if (pad_factor < 1) throw std::invalid_argument("periodogram: pad factor must be >= 1");

  const std::size_t n = signal.size();
  const double dt = (tau.back() - tau.front()) / static_cast<double>(n - 1);
  double mean = 0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);

  std::size_t nfft = 1;
  while (nfft < n * static_cast<std::size_t>(pad_factor)) nfft <<= 1;
  std::vector<double> buf(nfft, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    buf[i] = (signal[i] - mean) * w;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);

  Periodogram p;
  const std::size_t half = nfft / 2 + 1;
  p.frequency_mhz.resize(half);
  p.power.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    p.frequency_mhz[k] = static_cast<double>(k) / (static_cast<double>(nfft) * dt);
    p.power[k] = std::norm(spec[k]);
  }
  p.resolution_mhz = 1.0 / (static_cast<double>(n) * dt);
  return p;
}

std::vector<SpectralPeak> find_peaks(const Periodogram& p, std::size_t max_count, double min_relative_power) {
  std::vector<SpectralPeak> peaks;
  if (p.power.size() < 3) return peaks;
  const double top = *std::max_element(p.power.begin() + 1, p.power.end());
  if (!(top > 0)) return peaks;
  const double df = p.frequency_mhz[1] - p.frequency_mhz[0];
  for (std::size_t k = 1; k + 1 < p.power.size(); ++k) {
    const double l = p.power[k - 1], c = p.power[k], r = p.power[k + 1];
    if (!(c > l && c >= r) || c < min_relative_power * top) continue;
    // parabola through log power; exact for Gaussian-shaped lobes
    double offset = 0;
    if (l > 0 && r > 0) {
      const double a = std::log(l), b = std::log(c), d = std::log(r);
      const double denom = a - 2 * b + d;
      if (denom < 0) offset = 0.5 * (a - d) / denom;
    }
    peaks.push_back({p.frequency_mhz[k] + offset * df, c});
  }
  std::sort(peaks.begin(), peaks.end(), [](const SpectralPeak& a, const SpectralPeak& b) { return a.power > b.power; });
  if (peaks.size() > max_count) peaks.resize(max_count);
  return peaks;
}

std::vector<double> sliding_peak_to_peak(std::span<const double> tau, std::span<const double> signal,
                                         double window_us) {
  if (tau.size() != signal.size()) throw std::invalid_argument("sliding_peak_to_peak: length mismatch");
  const std::size_t n = tau.size();
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  const double half = window_us / 2;
  // monotone deques over a two-pointer window
  std::deque<std::size_t> maxq, minq;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tau[i] - half < tau.front() || tau[i] + half > tau.back()) continue;
    while (hi < n && tau[hi] <= tau[i] + half) {
      while (!maxq.empty() && signal[maxq.back()] <= signal[hi]) maxq.pop_back();
      maxq.push_back(hi);
      while (!minq.empty() && signal[minq.back()] >= signal[hi]) minq.pop_back();
      minq.push_back(hi);
      ++hi;
    }
    while (tau[lo] < tau[i] - half) ++lo;
    while (!maxq.empty() && maxq.front() < lo) maxq.pop_front();
    while (!minq.empty() && minq.front() < lo) minq.pop_front();
    out[i] = signal[maxq.front()] - signal[minq.front()];
  }
  return out;
}

}  // namespace ereem
