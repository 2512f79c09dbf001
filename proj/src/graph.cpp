#include "featflow/graph.hpp"

#include <algorithm>
#include <functional>
#include <future>
#include <thread>

#include "featflow/error.hpp"
#include "featflow/transform.hpp"

namespace featflow {
using nlohmann::json;

namespace {

[[noreturn]] void invalid_spec(const std::string& why) {
  throw Error(ErrorCode::kInvalidSpec, "invalid graph spec: " + why);
}

NodeSpec parse_node(const json& j, bool allow_ref) {
  NodeSpec node;
  if (j.is_string()) {
    if (!allow_ref) invalid_spec("top-level nodes must be definitions, not references");
    node.ref = j.get<std::string>();
    return node;
  }
  if (!j.is_object()) invalid_spec("node must be an object");
  if (j.contains("ref")) {
    if (!allow_ref) invalid_spec("top-level nodes must be definitions, not references");
    if (!j["ref"].is_string()) invalid_spec("'ref' must be a string");
    node.ref = j["ref"].get<std::string>();
    return node;
  }
  if (!j.contains("transformer") || !j["transformer"].is_string()) {
    invalid_spec("every node needs a 'transformer' name");
  }
  node.transformer = j["transformer"].get<std::string>();
  if (j.contains("id")) {
    if (!j["id"].is_string()) invalid_spec("'id' must be a string");
    node.id = j["id"].get<std::string>();
  }
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) invalid_spec("'parameters' must be an object");
    node.parameters = params_from_json(j["parameters"]);
  }
  if (j.contains("children")) {
    if (!j["children"].is_array()) invalid_spec("'children' must be an array");
    for (const auto& c : j["children"]) node.children.push_back(parse_node(c, true));
  }
  return node;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

bool accepts_from(const TransformerSpec& child, StimKind kind) {
  return accepts_kind(child.input_kinds, kind) || accepts_elements_of(child.input_kinds, kind);
}

void push_unique(std::vector<std::size_t>& v, std::size_t x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

GraphSpec parse_graph_spec(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    invalid_spec("expected an object with a 'nodes' array");
  }
  GraphSpec spec;
  for (const auto& n : j["nodes"]) spec.nodes.push_back(parse_node(n, false));
  return spec;
}

GraphSpec parse_graph_spec_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    invalid_spec(std::string("not valid JSON: ") + e.what());
  }
  return parse_graph_spec(j);
}

std::vector<std::pair<std::size_t, std::size_t>> Graph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t c : nodes_[i].children) out.emplace_back(i, c);
  }
  return out;
}

std::size_t Graph::injected_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const GraphNode& n) { return n.injected; }));
}

const std::vector<std::size_t>* Graph::entries_for(StimKind kind) const {
  auto it = entries_.find(kind);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<StimKind> Graph::planned_kinds() const {
  std::vector<StimKind> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::size_t Graph::add_node(std::string transformer, ParamMap params, bool injected) {
  std::size_t k = name_counts_[transformer]++;
  GraphNode node;
  node.id = transformer + "#" + std::to_string(k);
  node.transformer = std::move(transformer);
  node.parameters = std::move(params);
  node.injected = injected;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

std::size_t Graph::splice_chain(std::size_t parent, std::optional<StimKind> input_kind,
                                const std::vector<std::string>& steps) {
  std::size_t current = parent;
  for (const std::string& step : steps) {
    int tag = (current == kNoNode && input_kind) ? static_cast<int>(*input_kind) : -1;
    auto key = std::make_tuple(current, tag, step);
    auto it = injected_index_.find(key);
    if (it != injected_index_.end()) {
      current = it->second;
      continue;
    }
    std::size_t node = add_node(step, {}, true);
    injected_index_.emplace(key, node);
    if (current == kNoNode) {
      push_unique(entries_[*input_kind], node);
    } else {
      push_unique(nodes_[current].children, node);
    }
    current = node;
  }
  return current;
}

void Graph::plan_root(StimKind kind, const Registry& registry, const ConversionPrefs& prefs) {
  if (entries_.count(kind)) return;
  entries_[kind];
  for (std::size_t root : roots_) {
    const TransformerSpec& spec = registry.at(nodes_[root].transformer).spec();
    if (accepts_from(spec, kind)) {
      push_unique(entries_[kind], root);
      continue;
    }
    ConversionPath path = find_path_to_any(registry, kind, spec.input_kinds, prefs);
    std::size_t last = splice_chain(kNoNode, kind, path.steps);
    push_unique(nodes_[last].children, root);
  }
}

Graph build_graph(const GraphSpec& spec, const Registry& registry, const ConversionPrefs& prefs,
                  std::optional<StimKind> root_kind) {
  Graph graph;
  std::map<std::string, std::size_t> ids;
  std::vector<std::pair<std::size_t, std::size_t>> user_edges;
  std::vector<std::pair<std::size_t, std::string>> pending_refs;

  std::function<std::size_t(const NodeSpec&)> define = [&](const NodeSpec& node) {
    if (!registry.contains(node.transformer)) {
      invalid_spec("unknown transformer '" + node.transformer + "'");
    }
    std::size_t index = graph.add_node(node.transformer, node.parameters, false);
    if (node.id) {
      if (!ids.emplace(*node.id, index).second) invalid_spec("duplicate node id '" + *node.id + "'");
    }
    for (const NodeSpec& child : node.children) {
      if (child.ref) {
        pending_refs.emplace_back(index, *child.ref);
        user_edges.emplace_back(index, kNoNode);
      } else {
        user_edges.emplace_back(index, define(child));
      }
    }
    return index;
  };
  for (const NodeSpec& node : spec.nodes) graph.roots_.push_back(define(node));

  // Resolve references in the order they were written.
  std::size_t next_ref = 0;
  for (auto& edge : user_edges) {
    if (edge.second != kNoNode) continue;
    const std::string& ref = pending_refs[next_ref++].second;
    auto it = ids.find(ref);
    if (it == ids.end()) invalid_spec("reference to unknown node id '" + ref + "'");
    edge.second = it->second;
  }

  std::vector<std::vector<std::size_t>> adjacency(graph.nodes_.size());
  for (const auto& [p, c] : user_edges) adjacency[p].push_back(c);

  // 0 = unvisited, 1 = on stack, 2 = done.
  std::vector<int> color(graph.nodes_.size(), 0);
  std::function<void(std::size_t)> visit = [&](std::size_t n) {
    color[n] = 1;
    for (std::size_t c : adjacency[n]) {
      if (color[c] == 1) {
        invalid_spec("cycle through node '" + graph.nodes_[c].id + "'");
      }
      if (color[c] == 0) visit(c);
    }
    color[n] = 2;
  };
  for (std::size_t n = 0; n < graph.nodes_.size(); ++n) {
    if (color[n] == 0) visit(n);
  }

  for (std::size_t n = 0; n < graph.nodes_.size(); ++n) {
    const TransformerSpec& s = registry.at(graph.nodes_[n].transformer).spec();
    if (s.kind == TransformerKind::kExtractor && !adjacency[n].empty()) {
      invalid_spec("extractor node '" + graph.nodes_[n].id + "' cannot have children");
    }
    if (s.kind == TransformerKind::kConverter && adjacency[n].empty()) {
      invalid_spec("converter node '" + graph.nodes_[n].id + "' must have at least one child");
    }
  }

  for (const auto& [parent, child] : user_edges) {
    StimKind out = *registry.at(graph.nodes_[parent].transformer).spec().output_kind;
    const TransformerSpec& child_spec = registry.at(graph.nodes_[child].transformer).spec();
    if (accepts_from(child_spec, out)) {
      push_unique(graph.nodes_[parent].children, child);
      continue;
    }
    ConversionPath path = find_path_to_any(registry, out, child_spec.input_kinds, prefs);
    std::size_t last = graph.splice_chain(parent, std::nullopt, path.steps);
    push_unique(graph.nodes_[last].children, child);
  }

  if (root_kind) graph.plan_root(*root_kind, registry, prefs);
  return graph;
}

RunReport run(const Graph& graph, std::span<const Stim> inputs, const Registry& registry,
              Cache* cache, const ConversionPrefs& prefs, const RunOptions& options) {
  RunReport report;
  report.executed = graph;
  for (const Stim& input : inputs) report.executed.plan_root(input.kind(), registry, prefs);
  const Graph& g = report.executed;

  std::size_t hits_before = cache ? cache->hits() : 0;
  std::size_t invocations_before = registry.total_invocations();
  WarningSink sink;
  ExecContext ctx{cache, prefs, options.skip_errors, &sink};

  std::function<void(std::size_t, const Stim&, std::vector<ExtractorResult>&)> feed =
      [&](std::size_t n, const Stim& stim, std::vector<ExtractorResult>& results) {
        const GraphNode& node = g.nodes()[n];
        const RegistryEntry& entry = registry.at(node.transformer);
        TransformOutput out;
        try {
          out = dispatch(registry, entry, stim, node.parameters, ctx);
        } catch (const TransformerFailure& f) {
          TransformerFailure wrapped(node.id, stim.id(), f.what(), f.cause_code());
          if (!options.skip_errors) throw wrapped;
          sink.add(std::string("skipped: ") + wrapped.what());
          return;
        }
        results.insert(results.end(), std::make_move_iterator(out.results.begin()),
                       std::make_move_iterator(out.results.end()));
        for (const Stim& s : out.stims) {
          for (std::size_t c : node.children) feed(c, s, results);
        }
      };

  auto process = [&](const Stim& input) {
    std::vector<ExtractorResult> results;
    for (std::size_t entry : *g.entries_for(input.kind())) feed(entry, input, results);
    return results;
  };

  std::vector<std::vector<ExtractorResult>> per_input(inputs.size());
  if (options.parallel && inputs.size() > 1) {
    std::size_t width = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < inputs.size(); start += width) {
      std::vector<std::future<std::vector<ExtractorResult>>> batch;
      std::size_t end = std::min(inputs.size(), start + width);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(std::async(std::launch::async, process, std::cref(inputs[i])));
      }
      for (std::size_t i = start; i < end; ++i) per_input[i] = batch[i - start].get();
    }
  } else {
    for (std::size_t i = 0; i < inputs.size(); ++i) per_input[i] = process(inputs[i]);
  }

  std::vector<ExtractorResult> all;
  for (auto& r : per_input) {
    all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  report.table = merge(all);
  report.inputs_processed = inputs.size();
  report.cache_hits = cache ? cache->hits() - hits_before : 0;
  report.invocations = registry.total_invocations() - invocations_before;
  report.warnings = sink.take();
  return report;
}

std::string to_dot(const Graph& graph) {
  std::string out = "digraph featflow {\n  node [shape=box];\n";
  for (const GraphNode& node : graph.nodes()) {
    out += "  \"" + dot_escape(node.id) + "\" [label=\"" +
           dot_escape(node.transformer + "(" + format_params(node.parameters) + ")") + "\"";
    if (node.injected) out += ", style=dashed";
    out += "];\n";
  }
  for (const auto& [from, to] : graph.edges()) {
    out += "  \"" + dot_escape(graph.nodes()[from].id) + "\" -> \"" +
           dot_escape(graph.nodes()[to].id) + "\";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace featflow
