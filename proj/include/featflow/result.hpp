#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "featflow/stim.hpp"

namespace featflow {

// Absent (monostate), numeric, or text.
using FeatureValue = std::variant<std::monostate, double, std::string>;

struct ResultRow {
  std::optional<double> onset;
  std::optional<double> duration;
  std::vector<FeatureValue> values;  // one per feature

  bool operator==(const ResultRow&) const = default;
};

struct StimRef {
  std::string stim_id;
  StimKind kind = StimKind::kText;
  std::size_t history_length = 0;
  std::optional<double> onset;
  std::optional<double> duration;

  bool operator==(const StimRef&) const = default;
};

struct ExtractorRef {
  std::string name;
  std::string parameter_digest;

  bool operator==(const ExtractorRef&) const = default;
};

struct ExtractorResult {
  std::vector<std::string> features;
  std::vector<ResultRow> rows;
  StimRef stim_ref;
  ExtractorRef extractor_ref;
  // Verbatim service response; never exported.
  std::optional<nlohmann::json> raw;

  bool operator==(const ExtractorResult&) const = default;
};

StimRef make_stim_ref(const Stim& stim);

struct TableRow {
  std::string stim_id;
  std::string extractor;
  std::string feature;
  std::optional<double> onset;
  std::optional<double> duration;
  FeatureValue value;

  bool operator==(const TableRow&) const = default;
};

// Canonical order: stim_id, onset (absent last), extractor, feature, then
// duration and value so that sorting is total.
bool canonical_less(const TableRow& a, const TableRow& b);

struct ResultTable {
  std::vector<TableRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  bool operator==(const ResultTable&) const = default;
};

// One row per (result row x feature). A row without an onset takes the
// stim's onset and, failing its own, the stim's duration.
std::vector<TableRow> to_rows(const ExtractorResult& result);

ResultTable merge(std::span<const ExtractorResult> results);

enum class ExportFormat { kCsv, kJson, kWideCsv };

std::optional<ExportFormat> parse_export_format(std::string_view name);

// csv/json: long format with columns stim_id,extractor,feature,onset,
// duration,value. wide_csv: one column per "extractor.feature", one row per
// (stim_id, onset). Absent values are empty fields; text values are always
// quoted so they never read back as numbers.
std::string export_table(const ResultTable& table, ExportFormat format);

// Inverse of the long CSV export.
ResultTable parse_csv(std::string_view csv);

// Shortest decimal that round-trips.
std::string format_number(double value);

}  // namespace featflow
