#include "featflow/dictionary.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "csv.hpp"
#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "featflow/text.hpp"

namespace featflow {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string required_field(const json& entry, const std::string& resource, const char* key) {
  if (!entry.contains(key) || !entry[key].is_string()) {
    throw Error(ErrorCode::kInvalidSpec,
                "dictionary '" + resource + "' needs a string field '" + key + "'");
  }
  return entry[key].get<std::string>();
}

std::string optional_field(const json& entry, const char* key) {
  auto it = entry.find(key);
  return it != entry.end() && it->is_string() ? it->get<std::string>() : std::string();
}

FeatureValue parse_cell(const std::string& cell, bool quoted) {
  std::string trimmed = text::strip_whitespace(cell);
  if (trimmed.empty()) return std::monostate{};
  if (!quoted) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
    if (ec == std::errc() && ptr == trimmed.data() + trimmed.size()) return v;
  }
  return cell;
}

char delimiter_for(const DictionaryResource& resource) {
  return resource.format == "tsv" ? '\t' : ',';
}

std::string file_name_for(const DictionaryResource& resource) {
  return resource.name + (resource.format == "tsv" ? ".tsv" : ".csv");
}

}  // namespace

DictionaryConfig parse_dictionary_config(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidSpec, "dictionary config must be an object keyed by name");
  }
  DictionaryConfig config;
  for (const auto& [name, entry] : j.items()) {
    if (!entry.is_object()) {
      throw Error(ErrorCode::kInvalidSpec, "dictionary '" + name + "' must be an object");
    }
    DictionaryResource r;
    r.name = name;
    r.title = optional_field(entry, "title");
    r.description_url = optional_field(entry, "description_url");
    r.source = optional_field(entry, "source");
    r.url = optional_field(entry, "url");
    r.format = required_field(entry, name, "format");
    r.language = optional_field(entry, "language");
    r.index = required_field(entry, name, "index");
    if (r.format != "csv" && r.format != "tsv" && r.format != "xls") {
      throw Error(ErrorCode::kInvalidSpec,
                  "dictionary '" + name + "' has unsupported format '" + r.format + "'");
    }
    config.emplace(name, std::move(r));
  }
  return config;
}

DictionaryConfig load_dictionary_config(const fs::path& path) {
  std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, path.string() + ": " + e.what());
  }
  return parse_dictionary_config(j);
}

DictionaryTable parse_dictionary_table(std::string_view data, char delimiter,
                                       const std::string& index) {
  // A UTF-8 byte order mark would otherwise stick to the first column name.
  if (data.starts_with("\xEF\xBB\xBF")) data.remove_prefix(3);
  std::size_t pos = 0;
  std::vector<std::string> header;
  std::vector<bool> quoted;
  if (!next_csv_record(data, pos, delimiter, header, quoted)) {
    throw Error(ErrorCode::kUnknownColumn, "dictionary file is empty; no column '" + index + "'");
  }
  for (std::string& h : header) h = text::strip_whitespace(h);
  std::size_t index_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == index) index_col = i;
  }
  if (index_col == header.size()) {
    throw Error(ErrorCode::kUnknownColumn, "dictionary has no index column '" + index + "'");
  }
  DictionaryTable table;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != index_col) table.columns.push_back(header[i]);
  }
  std::vector<std::string> fields;
  while (next_csv_record(data, pos, delimiter, fields, quoted)) {
    if (fields.size() <= index_col) continue;
    std::string key = text::to_lower(text::strip_whitespace(fields[index_col]));
    if (key.empty() || table.rows.count(key)) continue;
    std::vector<FeatureValue> values;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == index_col) continue;
      values.push_back(i < fields.size() ? parse_cell(fields[i], quoted[i]) : FeatureValue{});
    }
    table.rows.emplace(std::move(key), std::move(values));
  }
  return table;
}

DictionaryStore::DictionaryStore(DictionaryConfig config, DictionaryStoreOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  if (!options_.base_url_override) {
    if (const char* env = std::getenv("FEATFLOW_RESOURCE_BASE_URL"); env && *env) {
      options_.base_url_override = env;
    }
  }
}

const DictionaryResource& DictionaryStore::resource(std::string_view name) const {
  auto it = config_.find(std::string(name));
  if (it == config_.end()) {
    throw Error(ErrorCode::kUnknownResource, "unknown dictionary resource '" + std::string(name) + "'");
  }
  return it->second;
}

std::optional<fs::path> DictionaryStore::locate(const DictionaryResource& resource) const {
  std::string file = file_name_for(resource);
  for (const fs::path& dir : {options_.resource_dir, options_.cache_dir}) {
    if (dir.empty()) continue;
    fs::path candidate = dir / file;
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

std::string DictionaryStore::download_url(const DictionaryResource& resource) const {
  if (!options_.base_url_override) return resource.url;
  std::string base = *options_.base_url_override;
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::string_view url = resource.url;
  std::size_t scheme = url.find("://");
  std::size_t path_start = scheme == std::string_view::npos ? 0 : url.find('/', scheme + 3);
  if (path_start == std::string_view::npos) return base + "/";
  std::string_view path = url.substr(path_start);
  if (!path.starts_with("/")) return base + "/" + std::string(path);
  return base + std::string(path);
}

fs::path DictionaryStore::fetch(std::string_view name) const {
  const DictionaryResource& r = resource(name);
  if (!options_.fetcher) {
    throw Error(ErrorCode::kIoError, "no fetcher configured for dictionary '" + r.name + "'");
  }
  if (options_.cache_dir.empty()) {
    throw Error(ErrorCode::kIoError, "no cache directory for fetched dictionaries");
  }
  std::string body = options_.fetcher(download_url(r));
  fs::create_directories(options_.cache_dir);
  fs::path target = options_.cache_dir / file_name_for(r);
  write_file(target, body);
  return target;
}

std::shared_ptr<const DictionaryTable> DictionaryStore::table(std::string_view name) const {
  const DictionaryResource& r = resource(name);
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = tables_.find(name); it != tables_.end()) return it->second;
  std::optional<fs::path> path = locate(r);
  if (!path) {
    if (!options_.allow_fetch) {
      throw Error(ErrorCode::kIoError,
                  "dictionary '" + r.name + "' not found as " + file_name_for(r) +
                      " in the resource or cache directory; fetching requires opt-in");
    }
    path = fetch(name);
  }
  auto table = std::make_shared<const DictionaryTable>(
      parse_dictionary_table(read_file(*path), delimiter_for(r), r.index));
  ++load_count_;
  tables_.emplace(r.name, table);
  return table;
}

std::size_t DictionaryStore::load_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return load_count_;
}

ExtractorResult dictionary_extract(const TextStim& word, const DictionaryStore& store,
                                   const std::vector<std::string>& variables) {
  if (variables.empty()) {
    throw Error(ErrorCode::kInvalidParams, "dictionary extraction needs at least one variable");
  }
  std::string key = text::to_lower(text::strip_whitespace(word.text));
  ExtractorResult result;
  ResultRow row;
  for (const std::string& variable : variables) {
    std::size_t slash = variable.find('/');
    if (slash == std::string::npos) {
      throw Error(ErrorCode::kInvalidParams,
                  "variable '" + variable + "' is not of the form resource/column");
    }
    std::string resource = variable.substr(0, slash);
    std::string column = variable.substr(slash + 1);
    auto table = store.table(resource);
    auto col = std::find(table->columns.begin(), table->columns.end(), column);
    if (col == table->columns.end()) {
      throw Error(ErrorCode::kUnknownColumn,
                  "dictionary '" + resource + "' has no column '" + column + "'");
    }
    result.features.push_back(variable);
    auto hit = table->rows.find(key);
    row.values.push_back(hit == table->rows.end()
                             ? FeatureValue{}
                             : hit->second[static_cast<std::size_t>(col - table->columns.begin())]);
  }
  result.rows.push_back(std::move(row));
  return result;
}

}  // namespace featflow
