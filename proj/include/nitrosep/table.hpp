#pragma once

// Tabular data models: dated samples (TimeSeriesTable) and calendar-year
// aggregates (AnnualTable). Cells are optional; absent means missing.

#include <chrono>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nitrosep/error.hpp"
#include "nitrosep/matrix.hpp"

namespace nitrosep {

using Date = std::chrono::year_month_day;

// Parses exactly YYYY-MM-DD; anything else (including invalid calendar
// days) yields nullopt.
inline std::optional<Date> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t n) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4);
  const auto m = digits(5, 2);
  const auto d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

struct Variable {
  std::string code;
  std::string label;
  std::string unit;

  friend bool operator==(const Variable&, const Variable&) = default;
};

using Cell = std::optional<double>;

namespace detail {

inline void check_unique_codes(const std::vector<Variable>& vars) {
  std::unordered_set<std::string> seen;
  for (const auto& v : vars)
    if (!seen.insert(v.code).second) throw MalformedHeader("duplicate variable code " + v.code);
}

inline std::size_t find_code(const std::vector<Variable>& vars, std::string_view code) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].code == code) return i;
  throw UnknownVariable(std::string(code));
}

}  // namespace detail

struct TimeSeriesTable {
  std::vector<Date> timestamps;     // strictly ascending
  std::vector<Variable> variables;  // unique codes
  std::vector<Cell> values;         // timestamps.size() x variables.size(), row-major
  std::vector<std::string> media;   // empty, or one sample-medium code per row

  std::size_t rows() const noexcept { return timestamps.size(); }
  std::size_t cols() const noexcept { return variables.size(); }

  const Cell& at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  Cell& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }

  std::size_t index_of(std::string_view code) const { return detail::find_code(variables, code); }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += !v.has_value();
    return n;
  }

  void validate() const {
    if (values.size() != rows() * cols()) throw ShapeMismatch("table grid size mismatch");
    if (!media.empty() && media.size() != rows()) throw ShapeMismatch("media column length");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      if (!(timestamps[i - 1] < timestamps[i]))
        throw DuplicateTimestampVariable(format_iso_date(timestamps[i]), "*");
    detail::check_unique_codes(variables);
  }

  friend bool operator==(const TimeSeriesTable&, const TimeSeriesTable&) = default;
};

struct AnnualTable {
  std::vector<int> years;           // strictly ascending
  std::vector<Variable> variables;  // unique codes
  std::vector<Cell> values;         // years.size() x variables.size(), row-major

  std::size_t rows() const noexcept { return years.size(); }
  std::size_t cols() const noexcept { return variables.size(); }

  const Cell& at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  Cell& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }

  std::size_t index_of(std::string_view code) const { return detail::find_code(variables, code); }

  bool dense() const {
    for (const auto& v : values)
      if (!v) return false;
    return true;
  }

  std::vector<std::string> codes() const {
    std::vector<std::string> out;
    for (const auto& v : variables) out.push_back(v.code);
    return out;
  }

  // Dense numeric view; throws MissingCell on the first gap.
  Matrix to_matrix() const {
    Matrix m(rows(), cols());
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < cols(); ++c) {
        const auto& v = at(r, c);
        if (!v) throw MissingCell(years[r], variables[c].code);
        m(r, c) = *v;
      }
    }
    return m;
  }

  void validate() const {
    if (values.size() != rows() * cols()) throw ShapeMismatch("table grid size mismatch");
    for (std::size_t i = 1; i < years.size(); ++i)
      if (years[i - 1] >= years[i]) throw NonConsecutiveYears(years[i - 1], years[i]);
    detail::check_unique_codes(variables);
  }

  friend bool operator==(const AnnualTable&, const AnnualTable&) = default;
};

// Keeps the listed columns (by index, in the given order).
template <class Table>
Table select_columns(const Table& t, const std::vector<std::size_t>& keep) {
  Table out = t;
  out.variables.clear();
  for (std::size_t c : keep) out.variables.push_back(t.variables[c]);
  out.values.assign(t.rows() * keep.size(), std::nullopt);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t k = 0; k < keep.size(); ++k) out.values[r * keep.size() + k] = t.at(r, keep[k]);
  return out;
}

}  // namespace nitrosep
