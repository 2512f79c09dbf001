#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "featflow/error.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Paths longer than this are reported as missing.
inline constexpr std::size_t kMaxConversionHops = 6;

struct ConversionPrefs {
  std::vector<std::string> preferred_converters;  // highest priority first
  std::set<std::string> banned_converters;

  // Throws InvalidParams when a converter is both preferred and banned.
  void validate() const;
};

struct ConversionPath {
  StimKind from_kind = StimKind::kText;
  StimKind to_kind = StimKind::kText;
  std::vector<std::string> steps;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  bool operator==(const ConversionPath&) const = default;
};

class NoConversionPath : public Error {
 public:
  NoConversionPath(StimKind from, std::vector<StimKind> targets, std::set<StimKind> reachable);

  StimKind from() const { return from_; }
  const std::vector<StimKind>& targets() const { return targets_; }
  const std::set<StimKind>& reachable() const { return reachable_; }

 private:
  StimKind from_;
  std::vector<StimKind> targets_;
  std::set<StimKind> reachable_;
};

// A stim of kind `reached` can be handed to something expecting `target`:
// directly, via VideoFrame <: Image, or element-wise (ComplexText -> Text,
// Video -> VideoFrame).
bool kind_satisfies(StimKind reached, StimKind target);

// Minimum hop count over non-banned converters. Equal-length candidates are
// ordered by their per-step ranks compared lexicographically, where a
// converter's rank is (position in the preference list, registration
// order); unlisted converters rank after every listed one.
ConversionPath find_path(const Registry& registry, StimKind from, StimKind to,
                         const ConversionPrefs& prefs = {});

// Same search, stopping at the first kind satisfying any target. to_kind of
// the result is the first target (in the given order) that is satisfied.
ConversionPath find_path_to_any(const Registry& registry, StimKind from,
                                std::span<const StimKind> targets,
                                const ConversionPrefs& prefs = {});

}  // namespace featflow
