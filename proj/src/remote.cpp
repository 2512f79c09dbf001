#include "featflow/remote.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "featflow/builtins.hpp"
#include "featflow/error.hpp"
#include "featflow/media_io.hpp"

namespace featflow {
using nlohmann::json;

namespace {

[[noreturn]] void invalid_descriptor(const std::string& name, const std::string& why) {
  throw Error(ErrorCode::kInvalidSpec, "service '" + name + "': " + why);
}

std::string_view auth_name(AuthKind kind) {
  switch (kind) {
    case AuthKind::kNone: return "none";
    case AuthKind::kApiKeyHeader: return "api_key_header";
    case AuthKind::kApiKeyQueryParam: return "api_key_query_param";
  }
  return "none";
}

std::string_view encoding_name(RequestEncoding e) {
  return e == RequestEncoding::kJsonTextBody ? "json_text_body" : "base64_media_body";
}

std::string url_encode(std::string_view s) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return std::string(body);
  return std::string(body.substr(0, kMax)) + "...";
}

json media_body(const Stim& stim) {
  json body;
  if (const auto* text = stim.get_if<TextStim>()) {
    body["media_type"] = "text/plain; charset=utf-8";
    body["data"] = base64_encode(text->text);
  } else if (const auto* image = stim.get_if<ImageStim>()) {
    body["media_type"] = "image/x-portable-pixmap";
    body["data"] = base64_encode(encode_ppm(*image));
  } else if (const auto* frame = stim.get_if<VideoFrameStim>()) {
    body["media_type"] = "image/x-portable-pixmap";
    body["data"] = base64_encode(encode_ppm(frame->image));
  } else if (const auto* audio = stim.get_if<AudioStim>()) {
    body["media_type"] = "audio/wav";
    body["data"] = base64_encode(encode_wav(*audio));
  } else {
    throw Error(ErrorCode::kInvalidParams,
                "cannot encode a " + std::string(to_string(stim.kind())) + " stim as media");
  }
  return body;
}

HttpRequest build_request(const Stim& stim, const ServiceDescriptor& d, const ParamMap& params) {
  if (!is_subtype(stim.kind(), d.input_kind)) {
    throw Error(ErrorCode::kInvalidParams, "service '" + d.name + "' takes " +
                                               std::string(to_string(d.input_kind)) + ", got " +
                                               std::string(to_string(stim.kind())));
  }
  json body;
  if (d.request_encoding == RequestEncoding::kJsonTextBody) {
    const auto* text = stim.get_if<TextStim>();
    if (!text) {
      throw Error(ErrorCode::kInvalidParams, "json_text_body needs a Text stim");
    }
    body["text"] = text->text;
  } else {
    body = media_body(stim);
  }
  std::optional<std::string> model = get_string(params, "model");
  if (!model) model = d.model;
  if (model) body["model"] = *model;
  if (auto models = get_string_list(params, "models")) body["models"] = *models;

  HttpRequest request;
  request.url = d.base_url;
  request.headers["Content-Type"] = "application/json";
  request.body = body.dump();
  request.timeout_seconds = d.timeout;
  if (d.auth.kind != AuthKind::kNone) {
    std::string var = d.credential_env_var();
    const char* key = std::getenv(var.c_str());
    if (!key || !*key) {
      throw Error(ErrorCode::kMissingCredentials,
                  "service '" + d.name + "' needs an API key in " + var);
    }
    if (d.auth.kind == AuthKind::kApiKeyHeader) {
      request.headers[d.auth.name] = key;
    } else {
      request.url += (request.url.find('?') == std::string::npos ? "?" : "&") +
                     url_encode(d.auth.name) + "=" + url_encode(key);
    }
  }
  return request;
}

bool retryable(int status) { return status == 429 || status >= 500; }

json execute(const HttpRequest& request, const ServiceDescriptor& d, const RemoteOptions& options) {
  if (!options.transport) {
    throw Error(ErrorCode::kInvalidParams, "service '" + d.name + "' has no transport");
  }
  auto sleep = options.sleep ? options.sleep
                             : [](std::chrono::duration<double> s) { std::this_thread::sleep_for(s); };
  auto limiter = rate_limiter_for(d.name, d.rate_limit);
  for (int attempt = 0;; ++attempt) {
    bool last = attempt >= d.max_retries;
    limiter->acquire(sleep);
    try {
      HttpResponse response = options.transport(request);
      if (response.status >= 200 && response.status < 300) {
        try {
          return json::parse(response.body);
        } catch (const json::exception&) {
          throw Error(ErrorCode::kResponseShapeError,
                      "service '" + d.name + "' returned non-JSON body: " + excerpt(response.body));
        }
      }
      if (last || !retryable(response.status)) {
        throw ServiceError(response.status, excerpt(response.body));
      }
    } catch (const ServiceError& e) {
      if (last || (e.status() != 0 && !retryable(e.status()))) throw;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTimeout || last) throw;
    }
    sleep(std::chrono::duration<double>(d.backoff * std::pow(2.0, attempt)));
  }
}

FeatureValue map_value(const json& response, const std::string& pointer, const std::string& service) {
  const json* node = nullptr;
  try {
    node = &response.at(json::json_pointer(pointer));
  } catch (const json::exception&) {
    throw Error(ErrorCode::kResponseShapeError,
                "service '" + service + "': response has nothing at " + pointer);
  }
  if (node->is_number()) return node->get<double>();
  if (node->is_boolean()) return node->get<bool>() ? 1.0 : 0.0;
  if (node->is_string()) return node->get<std::string>();
  if (node->is_null()) return std::monostate{};
  throw Error(ErrorCode::kResponseShapeError,
              "service '" + service + "': value at " + pointer + " is not a scalar");
}

const json& at_pointer(const json& j, const std::string& pointer, const std::string& service) {
  try {
    return j.at(json::json_pointer(pointer));
  } catch (const json::exception&) {
    throw Error(ErrorCode::kResponseShapeError,
                "service '" + service + "': response has nothing at " + pointer);
  }
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

void ServiceDescriptor::validate() const {
  if (name.empty()) invalid_descriptor(name, "name is empty");
  if (base_url.empty()) invalid_descriptor(name, "base_url is empty");
  if (response_map.empty() && !word_rules) invalid_descriptor(name, "response_map is empty");
  if (!(rate_limit > 0.0)) invalid_descriptor(name, "rate_limit must be > 0");
  if (!(timeout > 0.0)) invalid_descriptor(name, "timeout must be > 0");
  if (max_retries < 0) invalid_descriptor(name, "max_retries must be >= 0");
  if (backoff < 0.0) invalid_descriptor(name, "backoff must be >= 0");
  if (auth.kind != AuthKind::kNone && auth.name.empty()) {
    invalid_descriptor(name, "auth needs a header or parameter name");
  }
  if (word_rules && input_kind != StimKind::kAudio) {
    invalid_descriptor(name, "word_rules need an Audio input kind");
  }
  if (request_encoding == RequestEncoding::kJsonTextBody && input_kind != StimKind::kText) {
    invalid_descriptor(name, "json_text_body only carries Text stims");
  }
}

std::string ServiceDescriptor::credential_env_var() const {
  std::string out = "FEATFLOW_API_KEY_";
  for (unsigned char c : name) {
    out.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
  }
  return out;
}

json ServiceDescriptor::to_json() const {
  json j;
  j["name"] = name;
  j["base_url"] = base_url;
  j["auth"] = {{"kind", auth_name(auth.kind)}, {"name", auth.name}};
  j["input_kind"] = to_string(input_kind);
  j["request_encoding"] = encoding_name(request_encoding);
  j["model"] = model ? json(*model) : json(nullptr);
  j["response_map"] = json::array();
  for (const ResponseRule& r : response_map) {
    j["response_map"].push_back({{"pointer", r.pointer}, {"feature", r.feature}});
  }
  if (word_rules) {
    j["word_rules"] = {{"words", word_rules->words},
                       {"text", word_rules->text},
                       {"onset", word_rules->onset},
                       {"duration", word_rules->duration}};
  }
  j["timeout"] = timeout;
  j["max_retries"] = max_retries;
  j["rate_limit"] = rate_limit;
  j["backoff"] = backoff;
  return j;
}

ServiceDescriptor ServiceDescriptor::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidSpec, "service descriptor must be an object");
  ServiceDescriptor d;
  try {
    d.name = j.at("name").get<std::string>();
    d.base_url = j.at("base_url").get<std::string>();
    if (j.contains("auth")) {
      const json& a = j["auth"];
      std::string kind = a.at("kind").get<std::string>();
      if (kind == "none") {
        d.auth.kind = AuthKind::kNone;
      } else if (kind == "api_key_header") {
        d.auth.kind = AuthKind::kApiKeyHeader;
      } else if (kind == "api_key_query_param") {
        d.auth.kind = AuthKind::kApiKeyQueryParam;
      } else {
        invalid_descriptor(d.name, "unknown auth kind '" + kind + "'");
      }
      d.auth.name = a.value("name", "");
    }
    auto kind = parse_stim_kind(j.at("input_kind").get<std::string>());
    if (!kind) invalid_descriptor(d.name, "unknown input_kind");
    d.input_kind = *kind;
    std::string encoding = j.value("request_encoding", "json_text_body");
    if (encoding == "json_text_body") {
      d.request_encoding = RequestEncoding::kJsonTextBody;
    } else if (encoding == "base64_media_body") {
      d.request_encoding = RequestEncoding::kBase64MediaBody;
    } else {
      invalid_descriptor(d.name, "unknown request_encoding '" + encoding + "'");
    }
    if (j.contains("model") && !j["model"].is_null()) d.model = j["model"].get<std::string>();
    for (const json& r : j.value("response_map", json::array())) {
      d.response_map.push_back({r.at("pointer").get<std::string>(), r.at("feature").get<std::string>()});
    }
    if (j.contains("word_rules")) {
      const json& w = j["word_rules"];
      WordRules rules;
      rules.words = w.at("words").get<std::string>();
      rules.text = w.value("text", rules.text);
      rules.onset = w.value("onset", rules.onset);
      rules.duration = w.value("duration", rules.duration);
      d.word_rules = rules;
    }
    d.timeout = j.value("timeout", d.timeout);
    d.max_retries = j.value("max_retries", d.max_retries);
    d.rate_limit = j.value("rate_limit", d.rate_limit);
    d.backoff = j.value("backoff", d.backoff);
  } catch (const json::exception& e) {
    invalid_descriptor(d.name, e.what());
  }
  d.validate();
  return d;
}

std::vector<ServiceDescriptor> load_service_descriptors(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, path + ": " + e.what());
  }
  std::vector<ServiceDescriptor> out;
  if (j.is_array()) {
    for (const json& d : j) out.push_back(ServiceDescriptor::from_json(d));
  } else {
    out.push_back(ServiceDescriptor::from_json(j));
  }
  return out;
}

void RateLimiter::acquire(const std::function<void(std::chrono::duration<double>)>& sleep) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto now = std::chrono::steady_clock::now();
  if (next_ && *next_ > now) {
    sleep(*next_ - now);
    now = std::max(std::chrono::steady_clock::now(), *next_);
  }
  next_ = now + std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval_);
}

std::shared_ptr<RateLimiter> rate_limiter_for(const std::string& service, double rate) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<RateLimiter>> limiters;
  std::lock_guard<std::mutex> lock(mutex);
  auto& limiter = limiters[service];
  if (!limiter) limiter = std::make_shared<RateLimiter>(rate);
  return limiter;
}

ExtractorResult remote_extract(const Stim& stim, const ServiceDescriptor& descriptor,
                               const RemoteOptions& options, const ParamMap& params) {
  HttpRequest request = build_request(stim, descriptor, params);
  json response = execute(request, descriptor, options);
  ExtractorResult result;
  ResultRow row;
  for (const ResponseRule& rule : descriptor.response_map) {
    result.features.push_back(rule.feature);
    row.values.push_back(map_value(response, rule.pointer, descriptor.name));
  }
  result.rows.push_back(std::move(row));
  result.raw = std::move(response);
  return result;
}

ComplexTextStim speech_to_text_convert(const AudioStim& audio, const ServiceDescriptor& descriptor,
                                       const RemoteOptions& options, const ParamMap& params) {
  if (!descriptor.word_rules) {
    throw Error(ErrorCode::kInvalidParams,
                "service '" + descriptor.name + "' declares no word_rules");
  }
  const WordRules& rules = *descriptor.word_rules;
  json response = execute(build_request(Stim(audio), descriptor, params), descriptor, options);
  const json& words = at_pointer(response, rules.words, descriptor.name);
  if (!words.is_array()) {
    throw Error(ErrorCode::kResponseShapeError,
                "service '" + descriptor.name + "': " + rules.words + " is not an array");
  }
  std::vector<TimedWord> timed;
  for (const json& w : words) {
    const json& text = at_pointer(w, rules.text, descriptor.name);
    const json& onset = at_pointer(w, rules.onset, descriptor.name);
    if (!text.is_string() || !onset.is_number()) {
      throw Error(ErrorCode::kResponseShapeError,
                  "service '" + descriptor.name + "': word entries need string text and numeric onset");
    }
    TimedWord t{text.get<std::string>(), onset.get<double>(), std::nullopt};
    if (w.contains(json::json_pointer(rules.duration))) {
      const json& duration = w.at(json::json_pointer(rules.duration));
      if (duration.is_number()) t.duration = duration.get<double>();
    }
    timed.push_back(std::move(t));
  }
  return words_to_complex_text(audio, std::move(timed));
}

void register_service(Registry& registry, const ServiceDescriptor& descriptor,
                      RemoteOptions options) {
  descriptor.validate();
  TransformerSpec spec;
  spec.name = descriptor.name;
  spec.input_kinds = {descriptor.input_kind};
  spec.parameters["service"] = descriptor.to_json();
  auto shared = std::make_shared<RemoteOptions>(std::move(options));
  if (descriptor.word_rules) {
    spec.kind = TransformerKind::kConverter;
    spec.output_kind = StimKind::kComplexText;
    registry.add(spec, make_converter([descriptor, shared](const Stim& s, const ParamMap& p) {
                   return std::vector<Stim>{
                       speech_to_text_convert(s.as<AudioStim>(), descriptor, *shared, p)};
                 }));
  } else {
    spec.kind = TransformerKind::kExtractor;
    registry.add(spec, make_extractor([descriptor, shared](const Stim& s, const ParamMap& p) {
                   return remote_extract(s, descriptor, *shared, p);
                 }));
  }
}

}  // namespace featflow
