#pragma once

// Power spectra of uniformly sampled traces and simple peak detection.

#include <cstddef>
#include <span>
#include <vector>

namespace ereem {

struct Periodogram {
  std::vector<double> frequency_mhz;  // cycles per microsecond
  std::vector<double> power;
  double resolution_mhz = 0;  // 1 / record length
};

/// Hann-windowed, mean-removed, zero-padded one-sided power spectrum.
/// The grid must be uniform to 1e-6 relative.
Periodogram periodogram(std::span<const double> tau_us, std::span<const double> signal, int pad_factor = 8);

struct SpectralPeak {
  double frequency_mhz = 0;
  double power = 0;
};

/// Local maxima above min_relative_power * max(power), strongest first,
/// with parabolic interpolation of the frequency. The DC bin is skipped.
std::vector<SpectralPeak> find_peaks(const Periodogram& p, std::size_t max_count, double min_relative_power = 1e-6);

/// Peak-to-peak amplitude of the signal over a centred window of the given
/// width, evaluated at each sample; samples whose window leaves the record
/// are set to NaN.
std::vector<double> sliding_peak_to_peak(std::span<const double> tau_us, std::span<const double> signal,
                                         double window_us);

bool is_uniform_grid(std::span<const double> tau_us, double rel_tol = 1e-6);

}  // namespace ereem
