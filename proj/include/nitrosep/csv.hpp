#pragma once

// RFC-4180 record splitting and field quoting.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nitrosep/error.hpp"

namespace nitrosep {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// Splits `text` into records. Quoted fields may contain commas, doubled
// quotes and line breaks. Blank lines are skipped.
inline std::vector<CsvRecord> split_csv(std::string_view text, char delim = ',') {
  std::vector<CsvRecord> out;
  CsvRecord rec;
  std::string field;
  std::size_t line = 1;
  bool in_quotes = false;
  bool field_started = false;
  rec.line = 1;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    const bool blank = rec.fields.empty() && field.empty() && !field_started;
    if (!blank) {
      end_field();
      out.push_back(std::move(rec));
    }
    rec = CsvRecord{};
    rec.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == delim) {
      end_field();
    } else if (ch == '\r') {
      // tolerated only as part of CRLF
      if (i + 1 >= text.size() || text[i + 1] != '\n') field.push_back(ch);
    } else if (ch == '\n') {
      ++line;
      end_record();
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (in_quotes) throw RaggedRow(rec.line);
  end_record();
  return out;
}

inline std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace nitrosep
