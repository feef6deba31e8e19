#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace blocknet::detail {

/// Shortest round-trip decimal form, independent of the C locale; "NA" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace blocknet::detail
