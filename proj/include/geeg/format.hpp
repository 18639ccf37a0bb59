#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace geeg {

// Shortest text that parses back to the same double; non-finite values
// become an empty field.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace geeg

namespace geeg {

// Shortest text for a single-precision value, so wire floats are stored
// exactly as they arrived.
inline std::string format_float(float v) {
  if (!std::isfinite(v)) return {};
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace geeg
