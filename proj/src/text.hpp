#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace ascnet::text {

/// Shortest round-trippable decimal form of a double.
inline std::string exact(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Fixed-width form for CSV reports.
inline std::string csv(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace ascnet::text
