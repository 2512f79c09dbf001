#include "featflow/result.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "csv.hpp"
#include "featflow/error.hpp"

namespace featflow {
namespace {

// Absent sorts after every present value.
int compare_optional(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return a.has_value() ? -1 : 1;
  if (!a) return 0;
  if (*a < *b) return -1;
  if (*b < *a) return 1;
  return 0;
}

int compare_value(const FeatureValue& a, const FeatureValue& b) {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (const auto* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    if (*x < y) return -1;
    if (y < *x) return 1;
    return 0;
  }
  if (const auto* x = std::get_if<std::string>(&a)) {
    int c = x->compare(std::get<std::string>(b));
    return (c > 0) - (c < 0);
  }
  return 0;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string csv_field(std::string_view s) {
  return needs_quotes(s) ? quote(s) : std::string(s);
}

std::string csv_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string csv_value(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&v)) return quote(*s);
  return {};
}

nlohmann::ordered_json json_value(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (!std::isfinite(*d)) return nullptr;
    return *d;
  }
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return nullptr;
}

nlohmann::ordered_json json_optional(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::string export_long_csv(const ResultTable& table) {
  std::string out = "stim_id,extractor,feature,onset,duration,value\n";
  for (const TableRow& r : table.rows) {
    out += csv_field(r.stim_id) + "," + csv_field(r.extractor) + "," +
           csv_field(r.feature) + "," + csv_optional(r.onset) + "," +
           csv_optional(r.duration) + "," + csv_value(r.value) + "\n";
  }
  return out;
}

std::string export_json(const ResultTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const TableRow& r : table.rows) {
    nlohmann::ordered_json row;
    row["stim_id"] = r.stim_id;
    row["extractor"] = r.extractor;
    row["feature"] = r.feature;
    row["onset"] = json_optional(r.onset);
    row["duration"] = json_optional(r.duration);
    row["value"] = json_value(r.value);
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

std::string export_wide_csv(const ResultTable& table) {
  std::set<std::string> column_set;
  for (const TableRow& r : table.rows) column_set.insert(r.extractor + "." + r.feature);
  std::vector<std::string> columns(column_set.begin(), column_set.end());
  std::map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < columns.size(); ++i) column_index[columns[i]] = i;

  struct WideRow {
    std::string stim_id;
    std::optional<double> onset;
    std::vector<std::optional<FeatureValue>> cells;
  };
  std::vector<WideRow> wide;
  auto key_less = [](const WideRow& a, const std::pair<std::string, std::optional<double>>& k) {
    if (a.stim_id != k.first) return a.stim_id < k.first;
    return compare_optional(a.onset, k.second) < 0;
  };
  for (const TableRow& r : table.rows) {
    auto key = std::make_pair(r.stim_id, r.onset);
    auto it = std::lower_bound(wide.begin(), wide.end(), key, key_less);
    if (it == wide.end() || it->stim_id != r.stim_id || compare_optional(it->onset, r.onset) != 0) {
      it = wide.insert(it, WideRow{r.stim_id, r.onset, std::vector<std::optional<FeatureValue>>(columns.size())});
    }
    std::string column = r.extractor + "." + r.feature;
    auto& cell = it->cells[column_index[column]];
    if (cell) {
      throw Error(ErrorCode::kPivotCollision,
                  "two values for stim '" + r.stim_id + "', onset " +
                      (r.onset ? format_number(*r.onset) : std::string("<absent>")) +
                      ", column '" + column + "'");
    }
    cell = r.value;
  }
  std::string out = "stim_id,onset";
  for (const auto& c : columns) out += "," + csv_field(c);
  out += "\n";
  for (const WideRow& w : wide) {
    out += csv_field(w.stim_id) + "," + csv_optional(w.onset);
    for (const auto& cell : w.cells) {
      out += ",";
      if (cell) out += csv_value(*cell);
    }
    out += "\n";
  }
  return out;
}

std::optional<double> parse_optional_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kDecodeError, "not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

StimRef make_stim_ref(const Stim& stim) {
  StimRef ref;
  ref.stim_id = stim.id();
  ref.kind = stim.kind();
  ref.history_length = stim.meta().history.size();
  ref.onset = stim.meta().onset;
  ref.duration = stim.meta().duration;
  return ref;
}

bool canonical_less(const TableRow& a, const TableRow& b) {
  if (a.stim_id != b.stim_id) return a.stim_id < b.stim_id;
  if (int c = compare_optional(a.onset, b.onset)) return c < 0;
  if (a.extractor != b.extractor) return a.extractor < b.extractor;
  if (a.feature != b.feature) return a.feature < b.feature;
  if (int c = compare_optional(a.duration, b.duration)) return c < 0;
  return compare_value(a.value, b.value) < 0;
}

std::vector<TableRow> to_rows(const ExtractorResult& result) {
  std::vector<TableRow> out;
  out.reserve(result.rows.size() * result.features.size());
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    const ResultRow& row = result.rows[r];
    if (row.values.size() != result.features.size()) {
      throw Error(ErrorCode::kArityMismatch,
                  "extractor '" + result.extractor_ref.name + "' row " + std::to_string(r) +
                      " has " + std::to_string(row.values.size()) + " values for " +
                      std::to_string(result.features.size()) + " features");
    }
    std::optional<double> onset = row.onset;
    std::optional<double> duration = row.duration;
    if (!onset) {
      onset = result.stim_ref.onset;
      if (!duration) duration = result.stim_ref.duration;
    }
    for (std::size_t f = 0; f < result.features.size(); ++f) {
      out.push_back(TableRow{result.stim_ref.stim_id, result.extractor_ref.name,
                             result.features[f], onset, duration, row.values[f]});
    }
  }
  return out;
}

ResultTable merge(std::span<const ExtractorResult> results) {
  ResultTable table;
  for (const ExtractorResult& r : results) {
    auto rows = to_rows(r);
    table.rows.insert(table.rows.end(), std::make_move_iterator(rows.begin()),
                      std::make_move_iterator(rows.end()));
  }
  std::sort(table.rows.begin(), table.rows.end(), canonical_less);
  return table;
}

std::optional<ExportFormat> parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::kCsv;
  if (name == "json") return ExportFormat::kJson;
  if (name == "wide_csv") return ExportFormat::kWideCsv;
  return std::nullopt;
}

std::string export_table(const ResultTable& table, ExportFormat format) {
  switch (format) {
    case ExportFormat::kCsv: return export_long_csv(table);
    case ExportFormat::kJson: return export_json(table);
    case ExportFormat::kWideCsv: return export_wide_csv(table);
  }
  return {};
}

ResultTable parse_csv(std::string_view csv) {
  ResultTable table;
  std::size_t pos = 0;
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  if (!next_csv_record(csv, pos, ',', fields, quoted) ||
      fields != std::vector<std::string>{"stim_id", "extractor", "feature", "onset", "duration", "value"}) {
    throw Error(ErrorCode::kDecodeError, "unexpected CSV header");
  }
  while (next_csv_record(csv, pos, ',', fields, quoted)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 6) {
      throw Error(ErrorCode::kDecodeError, "CSV record has " + std::to_string(fields.size()) + " fields");
    }
    TableRow row{fields[0], fields[1], fields[2], parse_optional_number(fields[3]),
                 parse_optional_number(fields[4]), std::monostate{}};
    if (quoted[5]) {
      row.value = fields[5];
    } else if (auto v = parse_optional_number(fields[5])) {
      row.value = *v;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace featflow
