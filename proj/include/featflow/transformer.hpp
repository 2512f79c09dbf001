#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "featflow/params.hpp"
#include "featflow/result.hpp"
#include "featflow/stim.hpp"

namespace featflow {

enum class TransformerKind { kConverter, kExtractor };

struct TransformerSpec {
  std::string name;
  TransformerKind kind = TransformerKind::kExtractor;
  std::vector<StimKind> input_kinds;
  std::optional<StimKind> output_kind;  // converters only
  ParamMap parameters;                  // defaults, overridable per call
  std::string version = "1";
  // Serial implementations are never invoked concurrently.
  bool serial = false;

  // Throws InvalidSpec when the converter/extractor shape is violated.
  void validate() const;
};

// Implementations see exactly one stim per call; iteration, conversion and
// caching are the framework's job.
class Converter {
 public:
  virtual ~Converter() = default;
  virtual std::vector<Stim> convert(const Stim& input, const ParamMap& params) const = 0;
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual ExtractorResult extract(const Stim& input, const ParamMap& params) const = 0;
};

using ConvertFn = std::function<std::vector<Stim>(const Stim&, const ParamMap&)>;
using ExtractFn = std::function<ExtractorResult(const Stim&, const ParamMap&)>;

std::shared_ptr<const Converter> make_converter(ConvertFn fn);
std::shared_ptr<const Extractor> make_extractor(ExtractFn fn);

using Implementation =
    std::variant<std::shared_ptr<const Converter>, std::shared_ptr<const Extractor>>;

// What one transformer call yields: stims from a converter, results from an
// extractor.
struct TransformOutput {
  std::vector<Stim> stims;
  std::vector<ExtractorResult> results;

  void append(TransformOutput other);
  bool operator==(const TransformOutput&) const = default;
};

class RegistryEntry {
 public:
  RegistryEntry(TransformerSpec spec, Implementation impl, std::size_t registration_index);

  const TransformerSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  bool is_converter() const { return spec_.kind == TransformerKind::kConverter; }
  std::size_t registration_index() const { return registration_index_; }

  // Runs the implementation on exactly one stim. Bumps the invocation
  // counter; no caching and no provenance stamping.
  TransformOutput call(const Stim& input, const ParamMap& effective_params) const;

  std::size_t invocations() const { return invocations_.load(); }
  void reset_invocations() const { invocations_.store(0); }

 private:
  TransformerSpec spec_;
  Implementation impl_;
  std::size_t registration_index_;
  mutable std::atomic<std::size_t> invocations_{0};
  mutable std::mutex serial_mutex_;
};

// Populated during setup, read-only while pipelines run.
class Registry {
 public:
  Registry() = default;
  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;
  Registry(Registry&&) = default;
  Registry& operator=(Registry&&) = default;

  // Throws DuplicateName or InvalidSpec.
  Registry& add(TransformerSpec spec, Implementation impl);

  const RegistryEntry* find(std::string_view name) const;
  // Throws UnknownTransformer.
  const RegistryEntry& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  // Converter names accepting `from` and producing `to`, registration order.
  const std::vector<std::string>& converters_between(StimKind from, StimKind to) const;

  std::vector<const RegistryEntry*> entries() const;
  std::vector<const RegistryEntry*> converters() const;

  std::size_t total_invocations() const;
  void reset_invocations() const;

 private:
  std::vector<std::unique_ptr<RegistryEntry>> entries_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::map<std::pair<StimKind, StimKind>, std::vector<std::string>> converter_index_;
};

}  // namespace featflow
