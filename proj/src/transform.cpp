#include "featflow/transform.hpp"

#include "featflow/error.hpp"

namespace featflow {

void WarningSink::add(std::string message) {
  std::lock_guard<std::mutex> lock(mutex_);
  messages_.push_back(std::move(message));
}

std::vector<std::string> WarningSink::take() {
  std::lock_guard<std::mutex> lock(mutex_);
  return std::exchange(messages_, {});
}

namespace {

TransformOutput stamp(const RegistryEntry& entry, const Stim& input,
                      const std::string& digest, TransformOutput out) {
  const TransformerSpec& spec = entry.spec();
  if (entry.is_converter()) {
    TransformRecord record{spec.name, digest, input.kind(), *spec.output_kind};
    for (Stim& s : out.stims) {
      if (!is_subtype(s.kind(), *spec.output_kind)) {
        throw TransformerFailure(spec.name, input.id(),
                                 "produced a " + std::string(to_string(s.kind())) +
                                     " stim, declared " +
                                     std::string(to_string(*spec.output_kind)));
      }
      StimMeta meta = s.meta();
      meta.source_name = input.meta().source_name;
      meta.history = input.meta().history;
      meta.history.push_back(record);
      s = s.with_meta(std::move(meta));
    }
  } else {
    for (ExtractorResult& r : out.results) {
      r.stim_ref = make_stim_ref(input);
      r.extractor_ref = ExtractorRef{spec.name, digest};
    }
  }
  return out;
}

}  // namespace

TransformOutput invoke(const RegistryEntry& entry, const Stim& input,
                       const ParamMap& overrides, const ExecContext& ctx) {
  const TransformerSpec& spec = entry.spec();
  ParamMap params = merge_params(spec.parameters, overrides);
  std::string digest = parameter_digest(params);
  auto compute = [&]() -> TransformOutput {
    try {
      return entry.call(input, params);
    } catch (const TransformerFailure&) {
      throw;
    } catch (const Error& e) {
      throw TransformerFailure(spec.name, input.id(), e.what(), e.code());
    } catch (const std::exception& e) {
      throw TransformerFailure(spec.name, input.id(), e.what());
    }
  };
  TransformOutput raw;
  if (ctx.cache) {
    CacheKey key{spec.name, spec.version, digest, stim_digest(input)};
    raw = ctx.cache->get_or_compute(key, compute);
  } else {
    raw = compute();
  }
  return stamp(entry, input, digest, std::move(raw));
}

TransformOutput dispatch(const Registry& registry, const RegistryEntry& entry,
                         const Stim& input, const ParamMap& overrides,
                         const ExecContext& ctx) {
  const auto& input_kinds = entry.spec().input_kinds;
  if (accepts_kind(input_kinds, input.kind())) return invoke(entry, input, overrides, ctx);
  TransformOutput out;
  if (accepts_elements_of(input_kinds, input.kind())) {
    for (const Stim& element : iter_elements(input)) {
      out.append(invoke(entry, element, overrides, ctx));
    }
    return out;
  }
  ConversionPath path = find_path_to_any(registry, input.kind(), input_kinds, ctx.prefs);
  for (const Stim& converted : apply_path(path, input, registry, ctx)) {
    out.append(dispatch(registry, entry, converted, overrides, ctx));
  }
  return out;
}

std::vector<Stim> apply_path(const ConversionPath& path, const Stim& input,
                             const Registry& registry, const ExecContext& ctx) {
  std::vector<Stim> current = {input};
  for (const std::string& step : path.steps) {
    const RegistryEntry& entry = registry.at(step);
    std::vector<Stim> next;
    for (const Stim& s : current) {
      TransformOutput out = invoke(entry, s, {}, ctx);
      next.insert(next.end(), std::make_move_iterator(out.stims.begin()),
                  std::make_move_iterator(out.stims.end()));
    }
    current = std::move(next);
  }
  return current;
}

std::vector<TransformOutput> transform(const Registry& registry, std::string_view name,
                                       std::span<const Stim> inputs, const ExecContext& ctx,
                                       const ParamMap& overrides) {
  const RegistryEntry& entry = registry.at(name);
  std::vector<TransformOutput> outputs;
  outputs.reserve(inputs.size());
  for (const Stim& input : inputs) {
    try {
      outputs.push_back(dispatch(registry, entry, input, overrides, ctx));
    } catch (const TransformerFailure& failure) {
      if (!ctx.skip_errors) throw;
      if (ctx.warnings) ctx.warnings->add(std::string("skipped: ") + failure.what());
    }
  }
  return outputs;
}

std::vector<TransformOutput> transform(const Registry& registry, std::string_view name,
                                       const Stim& input, const ExecContext& ctx,
                                       const ParamMap& overrides) {
  return transform(registry, name, std::span<const Stim>(&input, 1), ctx, overrides);
}

InputValidation validate_input(const Registry& registry, const TransformerSpec& spec,
                               StimKind kind, const ConversionPrefs& prefs) {
  if (accepts_kind(spec.input_kinds, kind) || accepts_elements_of(spec.input_kinds, kind)) {
    return {InputCheck::kDirect, {}};
  }
  try {
    find_path_to_any(registry, kind, spec.input_kinds, prefs);
    return {InputCheck::kNeedsConversion, {}};
  } catch (const NoConversionPath& e) {
    return {InputCheck::kImpossible, e.what()};
  }
}

}  // namespace featflow
