#pragma once
// Text serialization helpers. Doubles are written with %.17g, which strtod /
// from_chars parses back to the identical bit pattern, so every file format in
// the project round-trips exactly.

#include <charconv>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pica {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void append_values(std::string& out, std::span<const double> v) {
  for (double x : v) {
    out.push_back(' ');
    out += g17(x);
  }
}

inline double parse_double(std::string_view token, const char* what) {
  double v = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error(std::string(what) + ": bad number '" +
                             std::string(token) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view token, const char* what) {
  long long v = 0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error(std::string(what) + ": bad integer '" +
                             std::string(token) + "'");
  }
  return v;
}

}  // namespace pica
