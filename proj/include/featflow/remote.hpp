#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "featflow/params.hpp"
#include "featflow/result.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

struct HttpRequest {
  std::string method = "POST";
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  double timeout_seconds = 10.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Executes one request. Throws Error(kTimeout) when the deadline passes and
// ServiceError(0, ...) when no response arrives at all. Must be safe to call
// concurrently.
using Transport = std::function<HttpResponse(const HttpRequest&)>;

// cpp-httplib backed transport for http:// and https:// URLs.
Transport http_transport();

enum class AuthKind { kNone, kApiKeyHeader, kApiKeyQueryParam };

struct AuthSpec {
  AuthKind kind = AuthKind::kNone;
  std::string name;  // header or query parameter name
};

enum class RequestEncoding { kJsonTextBody, kBase64MediaBody };

// JSON pointer into the response -> feature name.
struct ResponseRule {
  std::string pointer;
  std::string feature;
};

// Word-level transcript rules: `words` points at an array; the other
// pointers are relative to each element.
struct WordRules {
  std::string words;
  std::string text = "/text";
  std::string onset = "/onset";
  std::string duration = "/duration";
};

struct ServiceDescriptor {
  std::string name;
  std::string base_url;
  AuthSpec auth;
  StimKind input_kind = StimKind::kText;
  RequestEncoding request_encoding = RequestEncoding::kJsonTextBody;
  std::optional<std::string> model;
  std::vector<ResponseRule> response_map;
  std::optional<WordRules> word_rules;  // speech-to-text services
  double timeout = 10.0;                // seconds
  int max_retries = 2;                  // retries after the first attempt
  double rate_limit = 10.0;             // requests per second
  double backoff = 0.5;                 // first retry delay, doubled per retry

  // Throws InvalidSpec.
  void validate() const;
  // FEATFLOW_API_KEY_<NAME>, NAME uppercased with non-alphanumerics as '_'.
  std::string credential_env_var() const;
  // Everything that shapes a response; used as cache-key material.
  nlohmann::json to_json() const;
  static ServiceDescriptor from_json(const nlohmann::json& j);
};

// Loads a descriptor file holding one object or an array of them.
std::vector<ServiceDescriptor> load_service_descriptors(const std::string& path);

// Spaces requests to one service at least 1/rate seconds apart. Shared
// across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double rate) : interval_(1.0 / rate) {}
  // Blocks (through `sleep`) until at least one interval has passed since
  // the previous grant. Callers are serialized while waiting.
  void acquire(const std::function<void(std::chrono::duration<double>)>& sleep);

 private:
  std::mutex mutex_;
  std::chrono::duration<double> interval_;
  std::optional<std::chrono::steady_clock::time_point> next_;
};

// Process-wide limiter for a service name; the first caller fixes the rate.
std::shared_ptr<RateLimiter> rate_limiter_for(const std::string& service, double rate);

struct RemoteOptions {
  Transport transport;
  // Defaults to std::this_thread::sleep_for; tests substitute a recorder.
  std::function<void(std::chrono::duration<double>)> sleep;
};

// Parameters a graph node may pass: "model" (string) or "models" (list).
// Throws MissingCredentials, ServiceError, ResponseShapeError, Timeout,
// InvalidParams.
ExtractorResult remote_extract(const Stim& stim, const ServiceDescriptor& descriptor,
                               const RemoteOptions& options, const ParamMap& params = {});

// One TextStim per transcribed word, onsets offset by the audio's onset and
// sorted. Same errors as remote_extract.
ComplexTextStim speech_to_text_convert(const AudioStim& audio, const ServiceDescriptor& descriptor,
                                       const RemoteOptions& options, const ParamMap& params = {});

// Registers an extractor (or, with word_rules, an Audio -> ComplexText
// converter) named after the descriptor.
void register_service(Registry& registry, const ServiceDescriptor& descriptor,
                      RemoteOptions options);

std::string base64_encode(std::string_view bytes);

}  // namespace featflow
