// featflow: run feature-extraction graphs over media files.
//
//   featflow run --graph g.json --input a.json --input b.json --output out.csv
//   featflow graph --graph g.json --input-kind video --dot g.dot
//   featflow resources list
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "featflow/builtins.hpp"
#include "featflow/cache.hpp"
#include "featflow/dictionary.hpp"
#include "featflow/error.hpp"
#include "featflow/graph.hpp"
#include "featflow/media_io.hpp"
#include "featflow/remote.hpp"

#ifndef FEATFLOW_DEFAULT_RESOURCE_DIR
#define FEATFLOW_DEFAULT_RESOURCE_DIR "resources"
#endif

namespace fs = std::filesystem;
using namespace featflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTransformFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonOptions {
  std::string resource_dir;
  std::string dictionary_config;  // default: <resource_dir>/dictionaries.json
  std::string resource_cache_dir;
  std::vector<std::string> service_files;
  std::vector<std::string> prefer;
  std::vector<std::string> ban;
  bool fetch = false;
};

struct RunConfig {
  std::string graph_spec_path;
  std::vector<std::string> input_paths;
  std::string output_path;  // empty: standard output
  std::string output_format = "csv";
  std::string dot_path;
  std::string cache_dir;
  bool skip_errors = false;
  bool parallel = false;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

fs::path resource_dir(const CommonOptions& o) {
  if (!o.resource_dir.empty()) return o.resource_dir;
  return env_or("FEATFLOW_RESOURCE_DIR", FEATFLOW_DEFAULT_RESOURCE_DIR);
}

fs::path resource_cache_dir(const CommonOptions& o) {
  if (!o.resource_cache_dir.empty()) return o.resource_cache_dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return fs::path(xdg) / "featflow" / "resources";
  }
  return fs::path(env_or("HOME", ".")) / ".cache" / "featflow" / "resources";
}

// file:// URLs read from disk so a local mirror works without a server.
std::string fetch_url(const std::string& url) {
  constexpr std::string_view kFile = "file://";
  if (url.starts_with(kFile)) return read_file(url.substr(kFile.size()));
  HttpRequest request;
  request.method = "GET";
  request.url = url;
  request.timeout_seconds = 60;
  HttpResponse response = http_transport()(request);
  if (response.status != 200) throw ServiceError(response.status, "fetching " + url);
  return response.body;
}

std::shared_ptr<DictionaryStore> make_store(const CommonOptions& o) {
  fs::path config_path = o.dictionary_config.empty()
                             ? resource_dir(o) / "dictionaries.json"
                             : fs::path(o.dictionary_config);
  DictionaryConfig config;
  if (fs::exists(config_path) || !o.dictionary_config.empty()) {
    config = load_dictionary_config(config_path);
  }
  DictionaryStoreOptions options;
  options.resource_dir = resource_dir(o);
  options.cache_dir = resource_cache_dir(o);
  options.allow_fetch = o.fetch;
  options.fetcher = fetch_url;
  return std::make_shared<DictionaryStore>(std::move(config), std::move(options));
}

Registry make_registry(const CommonOptions& o) {
  Registry registry;
  BuiltinOptions builtins;
  builtins.dictionaries = make_store(o);
  register_builtins(registry, builtins);
  for (const std::string& file : o.service_files) {
    for (const ServiceDescriptor& d : load_service_descriptors(file)) {
      register_service(registry, d, RemoteOptions{http_transport(), {}});
    }
  }
  return registry;
}

ConversionPrefs make_prefs(const CommonOptions& o) {
  ConversionPrefs prefs;
  prefs.preferred_converters = o.prefer;
  prefs.banned_converters.insert(o.ban.begin(), o.ban.end());
  prefs.validate();
  return prefs;
}

GraphSpec read_spec(const std::string& path) {
  return parse_graph_spec_text(read_file(path));
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
  } else {
    write_file(path, data);
  }
}

// Maps an exception from a command to its exit status.
int fail(const std::exception& e) {
  if (const auto* f = dynamic_cast<const TransformerFailure*>(&e)) {
    std::cerr << "featflow: " << f->what() << "\n";
    return kExitTransformFailure;
  }
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    std::cerr << "featflow: " << to_string(err->code()) << ": " << err->what() << "\n";
    return kExitConfigError;
  }
  std::cerr << "featflow: " << e.what() << "\n";
  return kExitConfigError;
}

int cmd_run(const RunConfig& config, const CommonOptions& common) {
  std::unique_ptr<Cache> cache;
  try {
    auto format = parse_export_format(config.output_format);
    if (!format) {
      throw Error(ErrorCode::kInvalidParams, "unknown format '" + config.output_format + "'");
    }
    Registry registry = make_registry(common);
    ConversionPrefs prefs = make_prefs(common);
    Graph graph = build_graph(read_spec(config.graph_spec_path), registry, prefs);

    std::vector<Stim> inputs;
    for (const std::string& path : config.input_paths) inputs.push_back(load_stim(path));

    if (!config.cache_dir.empty() && fs::exists(config.cache_dir)) {
      std::vector<std::string> warnings;
      cache = load_cache(config.cache_dir, &warnings);
      for (const std::string& w : warnings) std::cerr << "featflow: warning: " << w << "\n";
    } else {
      cache = std::make_unique<Cache>();
    }

    RunOptions options;
    options.skip_errors = config.skip_errors;
    options.parallel = config.parallel;
    RunReport report;
    try {
      report = run(graph, inputs, registry, cache.get(), prefs, options);
    } catch (...) {
      if (!config.cache_dir.empty()) cache->persist(config.cache_dir);
      throw;
    }
    if (!config.cache_dir.empty()) cache->persist(config.cache_dir);

    write_output(config.output_path, export_table(report.table, *format));
    if (!config.dot_path.empty()) write_file(config.dot_path, to_dot(report.executed));
    for (const std::string& w : report.warnings) std::cerr << "featflow: warning: " << w << "\n";
    std::cerr << "featflow: " << report.inputs_processed << " inputs processed, "
              << report.table.size() << " rows emitted, " << report.cache_hits
              << " cache hits\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_graph(const std::string& spec_path, const std::string& input_kind,
              const std::string& dot_path, const CommonOptions& common) {
  try {
    auto kind = parse_stim_kind(input_kind);
    if (!kind) throw Error(ErrorCode::kInvalidParams, "unknown input kind '" + input_kind + "'");
    Registry registry = make_registry(common);
    Graph graph = build_graph(read_spec(spec_path), registry, make_prefs(common), *kind);
    write_output(dot_path, to_dot(graph));
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_resources(const std::string& action, const std::vector<std::string>& names,
                  const CommonOptions& common) {
  try {
    auto store = make_store(common);
    std::vector<std::string> selected = names;
    if (selected.empty()) {
      for (const auto& [name, r] : store->config()) selected.push_back(name);
    }
    for (const std::string& name : selected) {
      const DictionaryResource& r = store->resource(name);
      if (action == "list") {
        std::cout << r.name << "\t" << r.title << "\t" << r.source << "\n";
      } else {
        fs::path path = store->fetch(name);
        std::cerr << "featflow: fetched " << name << " to " << path.string() << "\n";
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--resource-dir", o.resource_dir, "Directory holding dictionary files");
  cmd->add_option("--dictionaries", o.dictionary_config, "Dictionary config JSON");
  cmd->add_option("--resource-cache", o.resource_cache_dir, "Where fetched dictionaries are kept");
  cmd->add_option("--services", o.service_files, "Service descriptor JSON file");
  cmd->add_option("--prefer", o.prefer, "Preferred converter, highest priority first");
  cmd->add_option("--ban", o.ban, "Converter never to use implicitly");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"featflow: multimodal feature extraction graphs"};
  app.require_subcommand(1);

  CommonOptions common;
  RunConfig run_config;
  auto* run_cmd = app.add_subcommand("run", "Run a graph over input media and export the results");
  run_cmd->add_option("--graph", run_config.graph_spec_path, "Graph spec JSON")->required();
  run_cmd->add_option("--input", run_config.input_paths, "Input media file")->required();
  run_cmd->add_option("--output", run_config.output_path, "Output file (default: stdout)");
  run_cmd->add_option("--format", run_config.output_format, "csv, json or wide_csv")
      ->check(CLI::IsMember({"csv", "json", "wide_csv"}));
  run_cmd->add_option("--dot", run_config.dot_path, "Write the executed graph as DOT");
  run_cmd->add_option("--cache-dir", run_config.cache_dir, "Persist the transformer cache here");
  run_cmd->add_flag("--skip-errors", run_config.skip_errors, "Drop failing branches with a warning");
  run_cmd->add_flag("--parallel", run_config.parallel, "Process inputs concurrently");
  run_cmd->add_flag("--fetch", common.fetch, "Allow downloading missing dictionaries");
  add_common(run_cmd, common);

  std::string spec_path, input_kind, dot_path;
  auto* graph_cmd = app.add_subcommand("graph", "Write the planned graph as DOT without running it");
  graph_cmd->add_option("--graph", spec_path, "Graph spec JSON")->required();
  graph_cmd->add_option("--input-kind", input_kind, "Kind of the raw inputs, e.g. video")->required();
  graph_cmd->add_option("--dot", dot_path, "Output file (default: stdout)");
  add_common(graph_cmd, common);

  std::string action;
  std::vector<std::string> names;
  auto* res_cmd = app.add_subcommand("resources", "List or fetch dictionary resources");
  res_cmd->add_option("action", action, "list or fetch")
      ->required()
      ->check(CLI::IsMember({"list", "fetch"}));
  res_cmd->add_option("names", names, "Resource names (default: all)");
  add_common(res_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (*run_cmd) return cmd_run(run_config, common);
  if (*graph_cmd) return cmd_graph(spec_path, input_kind, dot_path, common);
  return cmd_resources(action, names, common);
}
