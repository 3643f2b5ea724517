#pragma once

// Temporal preprocessing: calendar-year means, pruning of gappy and
// redundant variables, and lagged differencing.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nitrosep/csv.hpp"
#include "nitrosep/error.hpp"
#include "nitrosep/ingest.hpp"
#include "nitrosep/numfmt.hpp"
#include "nitrosep/table.hpp"

namespace nitrosep {

struct RedundancyRule {
  std::string composite;
  std::vector<std::string> parts;

  void validate() const {
    if (parts.empty()) throw InvalidConfig("redundancy rule for " + composite + " has no parts");
    if (std::find(parts.begin(), parts.end(), composite) != parts.end())
      throw InvalidConfig("redundancy rule for " + composite + " lists itself as a part");
  }

  friend bool operator==(const RedundancyRule&, const RedundancyRule&) = default;
};

// Nitrogen composition identities, keyed by USGS parameter code:
//   00631 nitrate+nitrite   = 00618 nitrate + 00613 nitrite
//   00625 Kjeldahl N        = 00605 organic N + 00608 ammonia N
//   00600 total N           = 00625 Kjeldahl N + 00618 + 00613
inline std::vector<RedundancyRule> default_redundancy_rules() {
  return {
      {"00631", {"00618", "00613"}},
      {"00625", {"00605", "00608"}},
      {"00600", {"00625", "00618", "00613"}},
  };
}

// Per-variable arithmetic mean of the non-missing observations in each
// calendar year. Values are summed in sorted order so the result does not
// depend on the order of observations within a year.
inline AnnualTable annual_mean(const TimeSeriesTable& t) {
  AnnualTable out;
  out.variables = t.variables;
  const std::size_t p = t.cols();
  std::map<int, std::vector<std::vector<double>>> by_year;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const int year = static_cast<int>(t.timestamps[r].year());
    auto& bucket = by_year[year];
    if (bucket.empty()) bucket.resize(p);
    for (std::size_t c = 0; c < p; ++c)
      if (const auto& v = t.at(r, c)) bucket[c].push_back(*v);
  }
  for (auto& [year, bucket] : by_year) {
    out.years.push_back(year);
    for (auto& obs : bucket) {
      if (obs.empty()) {
        out.values.emplace_back(std::nullopt);
        continue;
      }
      std::sort(obs.begin(), obs.end());
      double sum = 0.0;
      for (double v : obs) sum += v;
      out.values.emplace_back(sum / static_cast<double>(obs.size()));
    }
  }
  return out;
}

inline AnnualTable drop_na_columns(const AnnualTable& a) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    bool complete = true;
    for (std::size_t r = 0; r < a.rows() && complete; ++r) complete = a.at(r, c).has_value();
    if (complete) keep.push_back(c);
  }
  if (keep.empty()) throw EmptyResult("every variable has a missing annual value");
  return select_columns(a, keep);
}

struct RedundancyResult {
  AnnualTable table;
  std::vector<RedundancyRule> removed;  // rules that fired, in rule order
};

// Every rule is evaluated against the input column set, so the outcome does
// not depend on rule order.
inline RedundancyResult drop_redundant(const AnnualTable& a, const std::vector<RedundancyRule>& rules) {
  std::set<std::string> present;
  for (const auto& v : a.variables) present.insert(v.code);
  std::set<std::string> doomed;
  RedundancyResult result;
  for (const auto& rule : rules) {
    rule.validate();
    if (!present.count(rule.composite)) continue;
    const bool all_parts = std::all_of(rule.parts.begin(), rule.parts.end(),
                                       [&](const std::string& p) { return present.count(p) > 0; });
    if (!all_parts) continue;
    if (doomed.insert(rule.composite).second) result.removed.push_back(rule);
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < a.cols(); ++c)
    if (!doomed.count(a.variables[c].code)) keep.push_back(c);
  result.table = select_columns(a, keep);
  return result;
}

// Row i of the output is a(i + lag) - a(i), labelled with the later year.
inline AnnualTable difference(const AnnualTable& a, std::size_t lag) {
  if (lag < 1) throw InvalidConfig("lag must be >= 1");
  if (a.rows() <= lag)
    throw TooShort(std::to_string(a.rows()) + " rows cannot be differenced at lag " + std::to_string(lag));
  for (std::size_t i = 1; i < a.rows(); ++i)
    if (a.years[i] != a.years[i - 1] + 1) throw NonConsecutiveYears(a.years[i - 1], a.years[i]);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (!a.at(r, c)) throw MissingCell(a.years[r], a.variables[c].code);

  AnnualTable out;
  out.variables = a.variables;
  for (std::size_t i = 0; i + lag < a.rows(); ++i) {
    out.years.push_back(a.years[i + lag]);
    for (std::size_t c = 0; c < a.cols(); ++c) out.values.emplace_back(*a.at(i + lag, c) - *a.at(i, c));
  }
  return out;
}

// CSV with a leading "year" column; missing cells are written empty.
inline std::string emit_annual_csv(const AnnualTable& a) {
  std::ostringstream os;
  os << "year";
  for (const auto& v : a.variables) os << ',' << csv_quote(v.code);
  os << '\n';
  for (std::size_t r = 0; r < a.rows(); ++r) {
    os << a.years[r];
    for (std::size_t c = 0; c < a.cols(); ++c) {
      os << ',';
      if (const auto& v = a.at(r, c)) os << format_number(*v);
    }
    os << '\n';
  }
  return os.str();
}

inline AnnualTable parse_annual_csv(std::string_view input) {
  const auto records = split_csv(input);
  if (records.empty()) throw MalformedHeader("empty input");
  const auto& header = records.front().fields;
  if (header.size() < 2) throw MalformedHeader("need a year column and at least one variable");
  AnnualTable a;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw MalformedHeader("empty column name");
    a.variables.push_back({header[c], "", ""});
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != header.size()) throw RaggedRow(rec.line);
    const auto year = parse_number(rec.fields[0]);
    if (!year || *year != static_cast<int>(*year)) throw MalformedDate(rec.fields[0], rec.line);
    a.years.push_back(static_cast<int>(*year));
    for (std::size_t c = 1; c < rec.fields.size(); ++c) a.values.push_back(parse_cell(rec.fields[c]));
  }
  a.validate();
  return a;
}

}  // namespace nitrosep
