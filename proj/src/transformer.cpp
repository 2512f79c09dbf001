#include "featflow/transformer.hpp"

#include <algorithm>

#include "featflow/error.hpp"

namespace featflow {
namespace {

class FnConverter final : public Converter {
 public:
  explicit FnConverter(ConvertFn fn) : fn_(std::move(fn)) {}
  std::vector<Stim> convert(const Stim& input, const ParamMap& params) const override {
    return fn_(input, params);
  }

 private:
  ConvertFn fn_;
};

class FnExtractor final : public Extractor {
 public:
  explicit FnExtractor(ExtractFn fn) : fn_(std::move(fn)) {}
  ExtractorResult extract(const Stim& input, const ParamMap& params) const override {
    return fn_(input, params);
  }

 private:
  ExtractFn fn_;
};

}  // namespace

void TransformerSpec::validate() const {
  auto invalid = [&](const std::string& why) {
    throw Error(ErrorCode::kInvalidSpec, "transformer '" + name + "': " + why);
  };
  if (name.empty()) invalid("name must not be empty");
  if (input_kinds.empty()) invalid("must accept at least one input kind");
  if (kind == TransformerKind::kConverter && !output_kind) {
    invalid("converters must declare an output kind");
  }
  if (kind == TransformerKind::kExtractor && output_kind) {
    invalid("extractors must not declare an output kind");
  }
}

std::shared_ptr<const Converter> make_converter(ConvertFn fn) {
  return std::make_shared<FnConverter>(std::move(fn));
}

std::shared_ptr<const Extractor> make_extractor(ExtractFn fn) {
  return std::make_shared<FnExtractor>(std::move(fn));
}

void TransformOutput::append(TransformOutput other) {
  stims.insert(stims.end(), std::make_move_iterator(other.stims.begin()),
               std::make_move_iterator(other.stims.end()));
  results.insert(results.end(), std::make_move_iterator(other.results.begin()),
                 std::make_move_iterator(other.results.end()));
}

RegistryEntry::RegistryEntry(TransformerSpec spec, Implementation impl,
                             std::size_t registration_index)
    : spec_(std::move(spec)), impl_(std::move(impl)), registration_index_(registration_index) {}

TransformOutput RegistryEntry::call(const Stim& input, const ParamMap& effective_params) const {
  std::unique_lock<std::mutex> lock(serial_mutex_, std::defer_lock);
  if (spec_.serial) lock.lock();
  invocations_.fetch_add(1);
  TransformOutput out;
  if (const auto* conv = std::get_if<std::shared_ptr<const Converter>>(&impl_)) {
    out.stims = (*conv)->convert(input, effective_params);
  } else {
    out.results.push_back(std::get<std::shared_ptr<const Extractor>>(impl_)->extract(input, effective_params));
  }
  return out;
}

Registry& Registry::add(TransformerSpec spec, Implementation impl) {
  spec.validate();
  bool impl_is_converter = std::holds_alternative<std::shared_ptr<const Converter>>(impl);
  if (impl_is_converter != (spec.kind == TransformerKind::kConverter)) {
    throw Error(ErrorCode::kInvalidSpec,
                "transformer '" + spec.name + "': implementation does not match declared kind");
  }
  if (by_name_.count(spec.name)) {
    throw Error(ErrorCode::kDuplicateName, "transformer '" + spec.name + "' already registered");
  }
  std::size_t index = entries_.size();
  if (spec.kind == TransformerKind::kConverter) {
    for (StimKind from : spec.input_kinds) {
      converter_index_[{from, *spec.output_kind}].push_back(spec.name);
    }
  }
  by_name_.emplace(spec.name, index);
  entries_.push_back(std::make_unique<RegistryEntry>(std::move(spec), std::move(impl), index));
  return *this;
}

const RegistryEntry* Registry::find(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : entries_[it->second].get();
}

const RegistryEntry& Registry::at(std::string_view name) const {
  if (const RegistryEntry* e = find(name)) return *e;
  throw Error(ErrorCode::kUnknownTransformer, "unknown transformer '" + std::string(name) + "'");
}

const std::vector<std::string>& Registry::converters_between(StimKind from, StimKind to) const {
  static const std::vector<std::string> kEmpty;
  auto it = converter_index_.find({from, to});
  return it == converter_index_.end() ? kEmpty : it->second;
}

std::vector<const RegistryEntry*> Registry::entries() const {
  std::vector<const RegistryEntry*> out;
  for (const auto& e : entries_) out.push_back(e.get());
  return out;
}

std::vector<const RegistryEntry*> Registry::converters() const {
  std::vector<const RegistryEntry*> out;
  for (const auto& e : entries_) {
    if (e->is_converter()) out.push_back(e.get());
  }
  return out;
}

std::size_t Registry::total_invocations() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e->invocations();
  return total;
}

void Registry::reset_invocations() const {
  for (const auto& e : entries_) e->reset_invocations();
}

}  // namespace featflow
