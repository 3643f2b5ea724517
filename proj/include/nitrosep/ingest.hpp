#pragma once

// Parsing of USGS RDB and plain CSV sample records into a TimeSeriesTable,
// and the per-variable/per-row filters applied before aggregation.

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nitrosep/csv.hpp"
#include "nitrosep/error.hpp"
#include "nitrosep/numfmt.hpp"
#include "nitrosep/table.hpp"

namespace nitrosep {

struct DateRange {
  Date start;
  Date end;  // inclusive

  bool contains(const Date& d) const { return !(d < start) && !(end < d); }
};

struct FilterSpec {
  std::size_t min_count = 1;
  DateRange date_range{Date{std::chrono::year{1}, std::chrono::January, std::chrono::day{1}},
                       Date{std::chrono::year{9999}, std::chrono::December, std::chrono::day{31}}};
  std::optional<std::string> required_variable;
  std::optional<std::string> medium_code;

  void validate() const {
    if (min_count < 1) throw InvalidConfig("min_count must be >= 1");
    if (date_range.end < date_range.start) throw InvalidConfig("date range start is after end");
  }
};

// "", "NA" and "na" are missing; so is anything that is not a number.
inline Cell parse_cell(std::string_view text) {
  if (text.empty() || text == "NA" || text == "na") return std::nullopt;
  return parse_number(text);
}

namespace detail {

struct RawRecord {
  std::size_t line;
  Date date;
  std::string medium;
  std::vector<Cell> cells;
};

// Merges same-date records; a variable observed twice on one date is an error.
inline TimeSeriesTable assemble(std::vector<Variable> variables, std::vector<RawRecord> records,
                                bool with_media) {
  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.date < b.date; });
  TimeSeriesTable t;
  t.variables = std::move(variables);
  const std::size_t p = t.variables.size();
  for (auto& rec : records) {
    if (!t.timestamps.empty() && t.timestamps.back() == rec.date) {
      const std::size_t r = t.rows() - 1;
      for (std::size_t c = 0; c < p; ++c) {
        if (!rec.cells[c]) continue;
        if (t.at(r, c)) throw DuplicateTimestampVariable(format_iso_date(rec.date), t.variables[c].code);
        t.at(r, c) = rec.cells[c];
      }
      if (with_media && rec.medium != t.media.back()) {
        if (t.media.back().empty()) {
          t.media.back() = rec.medium;
        } else if (!rec.medium.empty()) {
          throw DuplicateTimestampVariable(format_iso_date(rec.date), "medium_cd");
        }
      }
      continue;
    }
    t.timestamps.push_back(rec.date);
    t.values.insert(t.values.end(), rec.cells.begin(), rec.cells.end());
    if (with_media) t.media.push_back(rec.medium);
  }
  t.validate();
  return t;
}

inline Date parse_record_date(std::string_view text, std::size_t line) {
  std::string_view s = text;
  if (s.size() > 10 && (s[10] == ' ' || s[10] == 'T')) s = s.substr(0, 10);
  const auto d = parse_iso_date(s);
  if (!d) throw MalformedDate(std::string(text), line);
  return *d;
}

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline bool ends_with_any(std::string_view s, std::initializer_list<std::string_view> suffixes) {
  for (auto suf : suffixes)
    if (s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf) return true;
  return false;
}

}  // namespace detail

// Tab-delimited USGS RDB. Lines starting with '#' are comments; the first
// remaining line is the header, the second the column-format line.
//
// The date column is the first of sample_dt/date/datetime/sample_date.
// When the header contains USGS parameter columns (p + five digits), those
// are the variables, coded by their digits. Otherwise every column except
// the date, site_no, and *_cd/_tm/_id/_tz metadata is a variable.
// medium_cd, if present, is kept per row.
inline TimeSeriesTable parse_rdb(std::string_view input) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  {
    std::size_t start = 0;
    std::size_t number = 1;
    while (start <= input.size()) {
      auto nl = input.find('\n', start);
      if (nl == std::string_view::npos) nl = input.size();
      std::string_view l = input.substr(start, nl - start);
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      if (!l.empty() && l.front() != '#') lines.emplace_back(number, l);
      start = nl + 1;
      ++number;
    }
  }
  if (lines.size() < 2) throw MalformedHeader("missing header or column-format line");

  const auto header = detail::split_tabs(lines[0].second);
  const auto format = detail::split_tabs(lines[1].second);
  if (format.size() != header.size())
    throw MalformedHeader("column-format line has " + std::to_string(format.size()) +
                          " fields, header has " + std::to_string(header.size()));
  static const std::regex format_re("[0-9]*[sdn]");
  for (const auto& f : format)
    if (!std::regex_match(f, format_re)) throw MalformedHeader("bad column format '" + f + "'");

  std::optional<std::size_t> date_col;
  for (std::string_view name : {"sample_dt", "date", "datetime", "sample_date"}) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it != header.end()) {
      date_col = static_cast<std::size_t>(it - header.begin());
      break;
    }
  }
  if (!date_col) throw MalformedHeader("no date column");
  std::optional<std::size_t> medium_col;
  if (auto it = std::find(header.begin(), header.end(), "medium_cd"); it != header.end())
    medium_col = static_cast<std::size_t>(it - header.begin());

  static const std::regex param_re("p([0-9]{5})");
  std::vector<std::size_t> var_cols;
  std::vector<Variable> variables;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::smatch m;
    if (std::regex_match(header[c], m, param_re)) {
      var_cols.push_back(c);
      variables.push_back({m[1].str(), header[c], ""});
    }
  }
  if (var_cols.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == *date_col || header[c] == "site_no" ||
          detail::ends_with_any(header[c], {"_cd", "_tm", "_id", "_tz"}))
        continue;
      if (header[c].empty()) throw MalformedHeader("empty column name");
      var_cols.push_back(c);
      variables.push_back({header[c], header[c], ""});
    }
  }

  std::vector<detail::RawRecord> records;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto [number, text] = lines[i];
    const auto fields = detail::split_tabs(text);
    if (fields.size() != header.size()) throw RaggedRow(number);
    detail::RawRecord rec{number, detail::parse_record_date(fields[*date_col], number),
                          medium_col ? fields[*medium_col] : std::string{}, {}};
    rec.cells.reserve(var_cols.size());
    for (std::size_t c : var_cols) rec.cells.push_back(parse_cell(fields[c]));
    records.push_back(std::move(rec));
  }
  return detail::assemble(std::move(variables), std::move(records), medium_col.has_value());
}

// CSV with a header row; first column is the ISO date, the rest are
// variable codes.
inline TimeSeriesTable parse_csv(std::string_view input) {
  const auto records = split_csv(input);
  if (records.empty()) throw MalformedHeader("empty input");
  const auto& header = records.front().fields;
  if (header.size() < 2) throw MalformedHeader("need a date column and at least one variable");
  std::vector<Variable> variables;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw MalformedHeader("empty column name");
    variables.push_back({header[c], "", ""});
  }
  std::vector<detail::RawRecord> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != header.size()) throw RaggedRow(rec.line);
    detail::RawRecord raw{rec.line, detail::parse_record_date(rec.fields[0], rec.line), {}, {}};
    for (std::size_t c = 1; c < rec.fields.size(); ++c) raw.cells.push_back(parse_cell(rec.fields[c]));
    rows.push_back(std::move(raw));
  }
  return detail::assemble(std::move(variables), std::move(rows), false);
}

// Inverse of parse_csv; missing cells are written empty.
inline std::string emit_csv(const TimeSeriesTable& t) {
  std::ostringstream os;
  os << "date";
  for (const auto& v : t.variables) os << ',' << csv_quote(v.code);
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    os << format_iso_date(t.timestamps[r]);
    for (std::size_t c = 0; c < t.cols(); ++c) {
      os << ',';
      if (const auto& v = t.at(r, c)) os << format_number(*v);
    }
    os << '\n';
  }
  return os.str();
}

// Row filters (date range, medium, required variable) run first; the
// per-variable count threshold is then evaluated on the surviving rows.
// The required variable itself is never dropped by the count threshold.
inline TimeSeriesTable filter_table(const TimeSeriesTable& t, const FilterSpec& spec) {
  spec.validate();
  std::optional<std::size_t> required;
  if (spec.required_variable) required = t.index_of(*spec.required_variable);
  if (spec.medium_code && t.media.empty()) throw UnknownVariable("medium_cd");

  std::vector<std::size_t> keep_rows;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (!spec.date_range.contains(t.timestamps[r])) continue;
    if (spec.medium_code && t.media[r] != *spec.medium_code) continue;
    if (required && !t.at(r, *required)) continue;
    keep_rows.push_back(r);
  }

  std::vector<std::size_t> keep_cols;
  for (std::size_t c = 0; c < t.cols(); ++c) {
    std::size_t count = 0;
    for (std::size_t r : keep_rows) count += t.at(r, c).has_value();
    if (count >= spec.min_count || (required && c == *required)) keep_cols.push_back(c);
  }

  TimeSeriesTable out;
  for (std::size_t c : keep_cols) out.variables.push_back(t.variables[c]);
  for (std::size_t r : keep_rows) {
    out.timestamps.push_back(t.timestamps[r]);
    if (!t.media.empty()) out.media.push_back(t.media[r]);
    for (std::size_t c : keep_cols) out.values.push_back(t.at(r, c));
  }
  return out;
}

inline TimeSeriesTable drop_incomplete_rows(const TimeSeriesTable& t) {
  TimeSeriesTable out;
  out.variables = t.variables;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    bool complete = true;
    for (std::size_t c = 0; c < t.cols() && complete; ++c) complete = t.at(r, c).has_value();
    if (!complete) continue;
    out.timestamps.push_back(t.timestamps[r]);
    if (!t.media.empty()) out.media.push_back(t.media[r]);
    for (std::size_t c = 0; c < t.cols(); ++c) out.values.push_back(t.at(r, c));
  }
  if (out.rows() == 0) throw EmptyResult("no complete rows remain");
  return out;
}

}  // namespace nitrosep
