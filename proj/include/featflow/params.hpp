#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace featflow {

// Parameter values are JSON scalars or lists. std::map keeps keys sorted,
// which is what makes the digest insensitive to insertion order.
using ParamValue = nlohmann::json;
using ParamMap = std::map<std::string, ParamValue>;

// SHA-256 over a canonical rendering: sorted keys, every number widened to
// double so 1 and 1.0 agree.
std::string parameter_digest(const ParamMap& params);

ParamMap params_from_json(const nlohmann::json& object);
nlohmann::json params_to_json(const ParamMap& params);

// `defaults` overlaid by `overrides`.
ParamMap merge_params(const ParamMap& defaults, const ParamMap& overrides);

// Typed accessors; throw InvalidParams on a type mismatch.
std::optional<double> get_number(const ParamMap& params, const std::string& key);
std::optional<std::string> get_string(const ParamMap& params, const std::string& key);
std::optional<std::vector<std::string>> get_string_list(const ParamMap& params,
                                                        const std::string& key);

// "k=v, k2=v2" with JSON-rendered values; used for graph labels.
std::string format_params(const ParamMap& params);

}  // namespace featflow
