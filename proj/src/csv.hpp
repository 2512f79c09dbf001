#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "featflow/error.hpp"

namespace featflow {

// Splits one delimited record starting at `pos` (RFC 4180 quoting) and
// advances `pos` past its line break. `quoted[i]` tells whether field i was
// quoted. Returns false at end of input.
inline bool next_csv_record(std::string_view csv, std::size_t& pos, char delimiter,
                     std::vector<std::string>& fields, std::vector<bool>& quoted) {
  fields.clear();
  quoted.clear();
  if (pos >= csv.size()) return false;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  while (pos < csv.size()) {
    char c = csv[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < csv.size() && csv[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        in_quotes = false;
        ++pos;
        continue;
      }
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      was_quoted = true;
      ++pos;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      quoted.push_back(was_quoted);
      field.clear();
      was_quoted = false;
      ++pos;
    } else if (c == '\n' || c == '\r') {
      ++pos;
      if (c == '\r' && pos < csv.size() && csv[pos] == '\n') ++pos;
      break;
    } else {
      field.push_back(c);
      ++pos;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kDecodeError, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  quoted.push_back(was_quoted);
  return true;
}

}  // namespace featflow
