#include "featflow/planner.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace featflow {
namespace {

using Rank = std::pair<std::size_t, std::size_t>;

struct Candidate {
  std::vector<Rank> ranks;
  std::vector<std::string> steps;
};

std::string describe_kinds(const std::vector<StimKind>& kinds) {
  std::string out;
  for (StimKind k : kinds) {
    if (!out.empty()) out += "|";
    out += to_string(k);
  }
  return out;
}

std::string describe_kinds(const std::set<StimKind>& kinds) {
  return describe_kinds(std::vector<StimKind>(kinds.begin(), kinds.end()));
}

std::string no_path_message(StimKind from, const std::vector<StimKind>& targets,
                            const std::set<StimKind>& reachable) {
  return "no conversion path from " + std::string(to_string(from)) + " to " +
         describe_kinds(targets) + " (reachable: " + describe_kinds(reachable) + ")";
}

}  // namespace

NoConversionPath::NoConversionPath(StimKind from, std::vector<StimKind> targets,
                                   std::set<StimKind> reachable)
    : Error(ErrorCode::kNoConversionPath, no_path_message(from, targets, reachable)),
      from_(from),
      targets_(std::move(targets)),
      reachable_(std::move(reachable)) {}

void ConversionPrefs::validate() const {
  for (const auto& name : preferred_converters) {
    if (banned_converters.count(name)) {
      throw Error(ErrorCode::kInvalidParams,
                  "converter '" + name + "' is both preferred and banned");
    }
  }
}

bool kind_satisfies(StimKind reached, StimKind target) {
  if (is_subtype(reached, target)) return true;
  auto element = element_kind(reached);
  return element && is_subtype(*element, target);
}

ConversionPath find_path(const Registry& registry, StimKind from, StimKind to,
                         const ConversionPrefs& prefs) {
  StimKind targets[] = {to};
  return find_path_to_any(registry, from, targets, prefs);
}

ConversionPath find_path_to_any(const Registry& registry, StimKind from,
                                std::span<const StimKind> targets,
                                const ConversionPrefs& prefs) {
  prefs.validate();
  auto first_satisfied = [&](StimKind reached) -> std::optional<StimKind> {
    for (StimKind t : targets) {
      if (kind_satisfies(reached, t)) return t;
    }
    return std::nullopt;
  };
  if (auto hit = first_satisfied(from)) return ConversionPath{from, *hit, {}};

  struct Edge {
    const RegistryEntry* entry;
    Rank rank;
  };
  std::vector<Edge> edges;
  for (const RegistryEntry* e : registry.converters()) {
    if (prefs.banned_converters.count(e->name())) continue;
    auto pos = std::find(prefs.preferred_converters.begin(), prefs.preferred_converters.end(),
                         e->name());
    std::size_t pref_rank =
        static_cast<std::size_t>(pos - prefs.preferred_converters.begin());
    edges.push_back({e, {pref_rank, e->registration_index()}});
  }

  std::set<StimKind> visited = {from};
  std::map<StimKind, Candidate> frontier = {{from, {}}};
  for (std::size_t depth = 1; depth <= kMaxConversionHops && !frontier.empty(); ++depth) {
    std::map<StimKind, Candidate> next;
    for (const auto& [kind, path] : frontier) {
      for (const Edge& edge : edges) {
        const TransformerSpec& spec = edge.entry->spec();
        if (!accepts_kind(spec.input_kinds, kind)) continue;
        StimKind out = *spec.output_kind;
        // Self-loops and revisits can never shorten a path.
        if (out == kind || visited.count(out)) continue;
        Candidate cand = path;
        cand.ranks.push_back(edge.rank);
        cand.steps.push_back(edge.entry->name());
        auto it = next.find(out);
        if (it == next.end() || cand.ranks < it->second.ranks) next[out] = std::move(cand);
      }
    }
    const Candidate* best = nullptr;
    StimKind best_target = from;
    for (const auto& [kind, cand] : next) {
      visited.insert(kind);
      if (auto hit = first_satisfied(kind)) {
        if (!best || cand.ranks < best->ranks) {
          best = &cand;
          best_target = *hit;
        }
      }
    }
    if (best) return ConversionPath{from, best_target, best->steps};
    frontier = std::move(next);
  }
  visited.erase(from);
  throw NoConversionPath(from, std::vector<StimKind>(targets.begin(), targets.end()),
                         std::move(visited));
}

}  // namespace featflow
