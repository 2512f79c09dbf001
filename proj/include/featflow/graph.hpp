#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "featflow/cache.hpp"
#include "featflow/params.hpp"
#include "featflow/planner.hpp"
#include "featflow/result.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Declarative node. A node with `ref` set is a reference to another node's
// `id` rather than a definition, which is how shared children (and cycles)
// can be expressed.
struct NodeSpec {
  std::optional<std::string> id;
  std::optional<std::string> ref;
  std::string transformer;
  ParamMap parameters;
  std::vector<NodeSpec> children;
};

struct GraphSpec {
  std::vector<NodeSpec> nodes;
};

// {"nodes": [{"transformer": ..., "parameters": {...}, "children": [...]}]}.
// A child may be a node object, {"ref": "<id>"} or a bare id string.
// Throws InvalidSpec.
GraphSpec parse_graph_spec(const nlohmann::json& j);
GraphSpec parse_graph_spec_text(std::string_view text);

struct GraphNode {
  std::string id;  // "<transformer>#<k>"
  std::string transformer;
  ParamMap parameters;  // as given in the spec; empty for injected nodes
  bool injected = false;
  std::vector<std::size_t> children;
};

class Graph {
 public:
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& roots() const { return roots_; }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::size_t injected_count() const;

  // Nodes fed directly by raw inputs of `kind`; null until planned.
  const std::vector<std::size_t>* entries_for(StimKind kind) const;
  std::vector<StimKind> planned_kinds() const;

  // Splices root-level converters for inputs of `kind`. No-op when that
  // kind is already planned. Throws NoConversionPath.
  void plan_root(StimKind kind, const Registry& registry, const ConversionPrefs& prefs);

 private:
  friend Graph build_graph(const GraphSpec&, const Registry&, const ConversionPrefs&,
                           std::optional<StimKind>);

  std::size_t add_node(std::string transformer, ParamMap params, bool injected);
  // Connects `parent` (or the raw input, for npos) to `child`, sharing
  // injected prefixes already hanging off the same parent.
  std::size_t splice_chain(std::size_t parent, std::optional<StimKind> input_kind,
                           const std::vector<std::string>& steps);

  std::vector<GraphNode> nodes_;
  std::vector<std::size_t> roots_;
  std::map<StimKind, std::vector<std::size_t>> entries_;
  std::map<std::string, std::size_t> name_counts_;
  // (parent or npos, input kind for root chains, converter) -> injected node.
  std::map<std::tuple<std::size_t, int, std::string>, std::size_t> injected_index_;
};

inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

// Validates the spec (known transformers, extractors terminal, converters
// with children, no cycles) and injects converter chains on every
// kind-incompatible edge. With `root_kind`, root injection is planned too;
// otherwise it happens lazily in run(). Throws InvalidSpec, NoConversionPath.
Graph build_graph(const GraphSpec& spec, const Registry& registry,
                  const ConversionPrefs& prefs = {},
                  std::optional<StimKind> root_kind = std::nullopt);

struct RunOptions {
  bool skip_errors = false;
  // Process distinct inputs concurrently; nodes of one input stay serial.
  bool parallel = false;
};

struct RunReport {
  ResultTable table;
  Graph executed;  // including root injections planned for the inputs seen
  std::size_t inputs_processed = 0;
  std::size_t cache_hits = 0;
  std::size_t invocations = 0;
  std::vector<std::string> warnings;
};

// Feeds every input through the graph and merges all extractor results.
// Failures are fatal unless options.skip_errors is set, in which case the
// failing branch for that stim is dropped with a warning.
RunReport run(const Graph& graph, std::span<const Stim> inputs, const Registry& registry,
              Cache* cache = nullptr, const ConversionPrefs& prefs = {},
              const RunOptions& options = {});

// Graphviz digraph: one statement per node labelled "name(params)",
// injected nodes dashed, one statement per edge, in creation order.
std::string to_dot(const Graph& graph);

}  // namespace featflow
