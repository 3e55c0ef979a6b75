#pragma once

#include <numbers>

// Internal units: time in microseconds, angular frequency in rad/us, field in
// gauss. Ordinary frequencies cross the API boundary in MHz.
namespace ereem::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double angular(double mhz) { return two_pi * mhz; }
constexpr double mhz(double rad_per_us) { return rad_per_us / two_pi; }
constexpr double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }
constexpr double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

}  // namespace ereem::units
