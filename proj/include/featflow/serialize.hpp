#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "featflow/result.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Lossless JSON forms. Videos are materialised: every frame is decoded and
// the round trip yields an in-memory frame source.
nlohmann::json stim_to_json(const Stim& stim);
Stim stim_from_json(const nlohmann::json& j);

nlohmann::json result_to_json(const ExtractorResult& result);
ExtractorResult result_from_json(const nlohmann::json& j);

// CBOR framing of a TransformOutput, as stored in cache entries. Decoding
// failures raise CacheCorruption.
std::string encode_output(const TransformOutput& output);
TransformOutput decode_output(std::string_view bytes);

}  // namespace featflow
