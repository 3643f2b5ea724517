#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace nitrosep {

namespace detail {

inline void trim_fraction_zeros(std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) return;
  auto end = s.find_last_not_of('0');
  if (end == dot) --end;
  s.erase(end + 1);
}

}  // namespace detail

// 12 significant digits. Fixed notation for magnitudes in [1e-4, 1e6),
// lowercase scientific otherwise. Locale-independent.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const double ax = std::abs(x);
  if (ax >= 1e-4 && ax < 1e6) {
    const int exponent = static_cast<int>(std::floor(std::log10(ax)));
    const int decimals = std::max(0, 11 - exponent);
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, decimals);
    std::string s(buf, res.ptr);
    detail::trim_fraction_zeros(s);
    if (s == "-0") s = "0";
    return s;
  }
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, 11);
  std::string s(buf, res.ptr);
  const auto e = s.find('e');
  std::string mantissa = s.substr(0, e);
  detail::trim_fraction_zeros(mantissa);
  return mantissa + s.substr(e);
}

// Strict locale-independent parse of a whole field.
inline std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace nitrosep
