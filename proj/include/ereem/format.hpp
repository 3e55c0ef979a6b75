#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace ereem {

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_shortest(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0) return "0";  // folds -0 so output bytes do not depend on sign of zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) return std::to_string(value);
  return std::string(buf, res.ptr);
}

}  // namespace ereem
