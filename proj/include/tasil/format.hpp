#pragma once

#include <cstdio>
#include <optional>
#include <string>

namespace tasil {

// Fixed CSV float formatting: 12 significant digits ("%.12g").
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Undefined values render as an empty field.
inline std::string format_value(std::optional<double> v) {
  return v ? format_value(*v) : std::string();
}

}  // namespace tasil
