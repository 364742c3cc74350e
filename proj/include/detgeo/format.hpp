#pragma once

#include <charconv>
#include <string>

namespace detgeo {

// Locale-independent number rendering for CSV/JSON/CLI output.
inline std::string format_real(double v, int significant = 9) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant);
  return {buf, r.ptr};
}

inline std::string format_fixed(double v, int decimals = 9) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  return {buf, r.ptr};
}

}  // namespace detgeo
