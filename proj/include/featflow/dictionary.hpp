#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "featflow/result.hpp"
#include "featflow/stim.hpp"

namespace featflow {

// One entry of the dictionary config; the config is an object keyed by
// resource name.
struct DictionaryResource {
  std::string name;
  std::string title;
  std::string description_url;
  std::string source;
  std::string url;
  std::string format;  // csv, tsv, or xls (which needs a pre-converted csv)
  std::string language;
  std::string index;   // lookup column
};

using DictionaryConfig = std::map<std::string, DictionaryResource>;

// Throws InvalidSpec on a malformed config.
DictionaryConfig parse_dictionary_config(const nlohmann::json& j);
DictionaryConfig load_dictionary_config(const std::filesystem::path& path);

struct DictionaryTable {
  std::vector<std::string> columns;  // excluding the index column
  // Lowercased index -> one value per column. First occurrence wins.
  std::unordered_map<std::string, std::vector<FeatureValue>> rows;
};

// Delimited text with a header row and RFC 4180 quoting. Numeric cells
// become numbers, empty cells absent. Throws UnknownColumn when the index
// column is missing.
DictionaryTable parse_dictionary_table(std::string_view data, char delimiter,
                                       const std::string& index);

// Fetches a URL and returns the body. Throws on failure.
using Fetcher = std::function<std::string(const std::string& url)>;

struct DictionaryStoreOptions {
  // Searched first for <name>.csv / <name>.tsv.
  std::filesystem::path resource_dir;
  // Where fetched files are kept; searched second.
  std::filesystem::path cache_dir;
  bool allow_fetch = false;
  Fetcher fetcher;
  // Replaces scheme://host of each resource url; FEATFLOW_RESOURCE_BASE_URL
  // when unset.
  std::optional<std::string> base_url_override;
};

// Loads each table at most once, on first use, and is safe to share
// between threads.
class DictionaryStore {
 public:
  DictionaryStore(DictionaryConfig config, DictionaryStoreOptions options);

  const DictionaryConfig& config() const { return config_; }
  // Throws UnknownResource.
  const DictionaryResource& resource(std::string_view name) const;
  // Throws UnknownResource, IoError.
  std::shared_ptr<const DictionaryTable> table(std::string_view name) const;
  // Downloads the resource into cache_dir (even if present) and returns the
  // written path. Throws UnknownResource, IoError.
  std::filesystem::path fetch(std::string_view name) const;
  // Effective download URL after the base-url override.
  std::string download_url(const DictionaryResource& resource) const;
  std::size_t load_count() const;

 private:
  std::optional<std::filesystem::path> locate(const DictionaryResource& resource) const;

  DictionaryConfig config_;
  DictionaryStoreOptions options_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const DictionaryTable>, std::less<>> tables_;
  mutable std::size_t load_count_ = 0;
};

// One row with a feature per "resource/column" variable. A word missing
// from a table gives absent values. Throws UnknownResource, UnknownColumn,
// InvalidParams.
ExtractorResult dictionary_extract(const TextStim& word, const DictionaryStore& store,
                                   const std::vector<std::string>& variables);

}  // namespace featflow
