#pragma once

#include <cstdio>
#include <string>

namespace covdiff {

// Floats in text outputs carry 17 significant digits so doubles round-trip.
inline std::string format_float(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace covdiff
