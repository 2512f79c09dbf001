#include "featflow/params.hpp"

#include "featflow/digest.hpp"
#include "featflow/error.hpp"

namespace featflow {
namespace {

nlohmann::json canonicalize(const nlohmann::json& v) {
  if (v.is_number()) return nlohmann::json(v.get<double>());
  if (v.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : v) out.push_back(canonicalize(e));
    return out;
  }
  if (v.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, e] : v.items()) out[k] = canonicalize(e);
    return out;
  }
  return v;
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  throw Error(ErrorCode::kInvalidParams, "parameter '" + key + "' must be " + expected);
}

}  // namespace

std::string parameter_digest(const ParamMap& params) {
  return sha256_hex(canonicalize(params_to_json(params)).dump());
}

ParamMap params_from_json(const nlohmann::json& object) {
  ParamMap out;
  if (object.is_null()) return out;
  if (!object.is_object()) {
    throw Error(ErrorCode::kInvalidParams, "parameters must be a JSON object");
  }
  for (const auto& [k, v] : object.items()) out[k] = v;
  return out;
}

nlohmann::json params_to_json(const ParamMap& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : params) out[k] = v;
  return out;
}

ParamMap merge_params(const ParamMap& defaults, const ParamMap& overrides) {
  ParamMap out = defaults;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

std::optional<double> get_number(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.is_null()) return std::nullopt;
  if (!it->second.is_number()) type_error(key, "a number");
  return it->second.get<double>();
}

std::optional<std::string> get_string(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.is_null()) return std::nullopt;
  if (!it->second.is_string()) type_error(key, "a string");
  return it->second.get<std::string>();
}

std::optional<std::vector<std::string>> get_string_list(const ParamMap& params,
                                                        const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.is_null()) return std::nullopt;
  if (it->second.is_string()) return std::vector<std::string>{it->second.get<std::string>()};
  if (!it->second.is_array()) type_error(key, "a string or list of strings");
  std::vector<std::string> out;
  for (const auto& e : it->second) {
    if (!e.is_string()) type_error(key, "a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string format_params(const ParamMap& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ", ";
    out += k + "=" + v.dump();
  }
  return out;
}

}  // namespace featflow
