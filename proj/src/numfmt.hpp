#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace geork::detail {

// Round-trip exact representation for CSV output.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

// Fixed-point decimal with 15 significant digits.
inline std::string format_fixed15(double x) {
  if (x == 0.0) return "0.00000000000000";
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(x))));
  const int decimals = exponent >= 14 ? 0 : 14 - exponent;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

}  // namespace geork::detail
