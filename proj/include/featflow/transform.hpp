#pragma once

#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featflow/cache.hpp"
#include "featflow/params.hpp"
#include "featflow/planner.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Collects skip_errors warnings; safe to share between threads.
class WarningSink {
 public:
  void add(std::string message);
  std::vector<std::string> take();

 private:
  std::mutex mutex_;
  std::vector<std::string> messages_;
};

struct ExecContext {
  Cache* cache = nullptr;
  ConversionPrefs prefs;
  // Downgrade per-element TransformerFailures to warnings.
  bool skip_errors = false;
  WarningSink* warnings = nullptr;
};

// One call of one transformer on one stim that it accepts: cache lookup,
// provenance stamping (history records, stim and extractor refs) and
// failure wrapping into TransformerFailure.
TransformOutput invoke(const RegistryEntry& entry, const Stim& input,
                       const ParamMap& overrides, const ExecContext& ctx);

// Runs `entry` on `input`, iterating elements or planning and applying a
// conversion path when the kind is not accepted directly.
TransformOutput dispatch(const Registry& registry, const RegistryEntry& entry,
                         const Stim& input, const ParamMap& overrides,
                         const ExecContext& ctx);

// Applies each converter on the path in order. Multi-output steps fan out,
// so the result may hold several stims (e.g. sampled frames).
std::vector<Stim> apply_path(const ConversionPath& path, const Stim& input,
                             const Registry& registry, const ExecContext& ctx);

// One output per input, in input order. Under skip_errors a failing input
// is dropped and a warning recorded.
std::vector<TransformOutput> transform(const Registry& registry, std::string_view name,
                                       std::span<const Stim> inputs,
                                       const ExecContext& ctx = {},
                                       const ParamMap& overrides = {});

std::vector<TransformOutput> transform(const Registry& registry, std::string_view name,
                                       const Stim& input, const ExecContext& ctx = {},
                                       const ParamMap& overrides = {});

enum class InputCheck { kDirect, kNeedsConversion, kImpossible };

struct InputValidation {
  InputCheck check = InputCheck::kImpossible;
  std::string reason;  // set when impossible
};

// Direct covers exact matches, VideoFrame-as-Image and element-wise
// acceptance of iterable stims.
InputValidation validate_input(const Registry& registry, const TransformerSpec& spec,
                               StimKind kind, const ConversionPrefs& prefs = {});

}  // namespace featflow
