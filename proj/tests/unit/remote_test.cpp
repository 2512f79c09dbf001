#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>

#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "featflow/remote.hpp"
#include "featflow/transform.hpp"
#include "fixtures.hpp"

using namespace featflow;
using namespace featflow::testing;

namespace {

// Each test gets its own service name so process-wide rate limiters never
// carry state between tests.
ServiceDescriptor sentiment(const std::string& name) {
  ServiceDescriptor d;
  d.name = name;
  d.base_url = "http://mock.invalid/sentiment";
  d.input_kind = StimKind::kText;
  d.model = "sentiment";
  d.response_map = {{"/results/sentiment", "sentiment"}};
  d.rate_limit = 1000.0;
  return d;
}

struct SleepLog {
  std::vector<double> seconds;
  std::function<void(std::chrono::duration<double>)> fn() {
    return [this](std::chrono::duration<double> d) { seconds.push_back(d.count()); };
  }
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

const HttpResponse kOk{200, R"({"results": {"sentiment": 0.75}})"};

}  // namespace

TEST(RemoteTest, MissingCredentialsBeforeAnyRequest) {
  ServiceDescriptor d = sentiment("KeyedService");
  d.auth = {AuthKind::kApiKeyHeader, "X-Api-Key"};
  ::unsetenv(d.credential_env_var().c_str());
  RecordingTransport transport(scripted({kOk}));
  EXPECT_EQ(code_of([&] { remote_extract(TextStim{{}, "hi"}, d, {transport.transport(), {}}); }),
            ErrorCode::kMissingCredentials);
  EXPECT_EQ(transport.calls(), 0u);
  EXPECT_EQ(d.credential_env_var(), "FEATFLOW_API_KEY_KEYEDSERVICE");
}

TEST(RemoteTest, CredentialsGoInHeaderOrQuery) {
  ServiceDescriptor header = sentiment("Header-Service");
  header.auth = {AuthKind::kApiKeyHeader, "X-Api-Key"};
  ::setenv(header.credential_env_var().c_str(), "s3cret", 1);
  RecordingTransport transport(scripted({kOk}));
  remote_extract(TextStim{{}, "hi"}, header, {transport.transport(), {}});
  EXPECT_EQ(header.credential_env_var(), "FEATFLOW_API_KEY_HEADER_SERVICE");
  EXPECT_EQ(transport.requests().at(0).headers.at("X-Api-Key"), "s3cret");

  ServiceDescriptor query = sentiment("QueryService");
  query.auth = {AuthKind::kApiKeyQueryParam, "key"};
  ::setenv(query.credential_env_var().c_str(), "a b&c", 1);
  remote_extract(TextStim{{}, "hi"}, query, {transport.transport(), {}});
  EXPECT_EQ(transport.requests().at(1).url, "http://mock.invalid/sentiment?key=a%20b%26c");
  ::unsetenv(header.credential_env_var().c_str());
  ::unsetenv(query.credential_env_var().c_str());
}

TEST(RemoteTest, RequestBodyAndMappedRow) {
  RecordingTransport transport(scripted({kOk}));
  ExtractorResult r = remote_extract(TextStim{{}, "great day"}, sentiment("BodyService"),
                                     {transport.transport(), {}}, {{"models", {"sentiment", "emotion"}}});
  auto body = nlohmann::json::parse(transport.requests().at(0).body);
  EXPECT_EQ(body["text"], "great day");
  EXPECT_EQ(body["model"], "sentiment");
  EXPECT_EQ(body["models"], nlohmann::json::array({"sentiment", "emotion"}));
  EXPECT_EQ(transport.requests().at(0).method, "POST");
  EXPECT_EQ(r.features, std::vector<std::string>{"sentiment"});
  EXPECT_EQ(std::get<double>(r.rows.at(0).values.at(0)), 0.75);
  EXPECT_EQ((*r.raw)["results"]["sentiment"], 0.75);
}

TEST(RemoteTest, MediaBodyIsBase64) {
  ServiceDescriptor d = sentiment("ImageService");
  d.input_kind = StimKind::kImage;
  d.request_encoding = RequestEncoding::kBase64MediaBody;
  d.model.reset();
  d.response_map = {{"/ok", "ok"}};
  RecordingTransport transport(scripted({{200, R"({"ok": true})"}}));
  ImageStim image = solid_image(1, 1, 1, 2, 3);
  ExtractorResult r = remote_extract(image, d, {transport.transport(), {}});
  auto body = nlohmann::json::parse(transport.requests().at(0).body);
  EXPECT_EQ(body["media_type"], "image/x-portable-pixmap");
  EXPECT_EQ(body["data"], base64_encode(encode_ppm(image)));
  EXPECT_FALSE(body.contains("model"));
  EXPECT_EQ(std::get<double>(r.rows[0].values[0]), 1.0);
}

TEST(RemoteTest, RetriesRateLimitedThenSucceeds) {
  RecordingTransport transport(scripted({{429, "slow down"}, kOk}));
  SleepLog sleeps;
  ExtractorResult r = remote_extract(TextStim{{}, "hi"}, sentiment("RetryService"),
                                     {transport.transport(), sleeps.fn()});
  EXPECT_EQ(transport.calls(), 2u);
  EXPECT_EQ(std::get<double>(r.rows[0].values[0]), 0.75);
  EXPECT_NE(std::find(sleeps.seconds.begin(), sleeps.seconds.end(), 0.5), sleeps.seconds.end());
}

TEST(RemoteTest, BackoffDoublesAndRetriesAreBounded) {
  ServiceDescriptor d = sentiment("FlakyService");
  d.max_retries = 3;
  d.backoff = 0.25;
  d.rate_limit = 1e9;
  RecordingTransport transport(scripted({{503, "down"}}));
  SleepLog sleeps;
  try {
    remote_extract(TextStim{{}, "hi"}, d, {transport.transport(), sleeps.fn()});
    FAIL() << "expected ServiceError";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(transport.calls(), 4u);
  std::vector<double> backoffs;
  for (double s : sleeps.seconds) {
    if (s >= 0.1) backoffs.push_back(s);
  }
  EXPECT_EQ(backoffs, (std::vector<double>{0.25, 0.5, 1.0}));
}

TEST(RemoteTest, ClientErrorsAreNotRetried) {
  RecordingTransport transport(scripted({{400, "bad"}, kOk}));
  EXPECT_EQ(code_of([&] {
              remote_extract(TextStim{{}, "hi"}, sentiment("BadRequestService"), {transport.transport(), [](auto) {}});
            }),
            ErrorCode::kServiceError);
  EXPECT_EQ(transport.calls(), 1u);
}

TEST(RemoteTest, TimeoutsAndDroppedConnectionsAreRetried) {
  int n = 0;
  RecordingTransport transport([&](const HttpRequest&) -> HttpResponse {
    ++n;
    if (n == 1) throw Error(ErrorCode::kTimeout, "deadline");
    if (n == 2) throw ServiceError(0, "connection reset");
    return kOk;
  });
  ServiceDescriptor d = sentiment("TimeoutService");
  ExtractorResult r = remote_extract(TextStim{{}, "hi"}, d, {transport.transport(), [](auto) {}});
  EXPECT_EQ(transport.calls(), 3u);
  d.max_retries = 0;
  d.name = "TimeoutServiceNoRetry";
  RecordingTransport always([](const HttpRequest&) -> HttpResponse { throw Error(ErrorCode::kTimeout, "x"); });
  EXPECT_EQ(code_of([&] { remote_extract(TextStim{{}, "hi"}, d, {always.transport(), [](auto) {}}); }),
            ErrorCode::kTimeout);
  EXPECT_EQ(always.calls(), 1u);
}

TEST(RemoteTest, UnexpectedResponseShapes) {
  RecordingTransport not_json(scripted({{200, "<html>"}}));
  EXPECT_EQ(code_of([&] { remote_extract(TextStim{{}, "x"}, sentiment("HtmlService"), {not_json.transport(), {}}); }),
            ErrorCode::kResponseShapeError);
  RecordingTransport wrong(scripted({{200, R"({"results": {}})"}}));
  EXPECT_EQ(code_of([&] { remote_extract(TextStim{{}, "x"}, sentiment("ShapeService"), {wrong.transport(), {}}); }),
            ErrorCode::kResponseShapeError);
}

TEST(RemoteTest, RateLimitSpacesRequests) {
  ServiceDescriptor d = sentiment("PacedService");
  d.rate_limit = 20.0;
  RecordingTransport transport(scripted({kOk}));
  for (int i = 0; i < 10; ++i) remote_extract(TextStim{{}, "x"}, d, {transport.transport(), {}});
  auto times = transport.times();
  ASSERT_EQ(times.size(), 10u);
  for (std::size_t i = 1; i < times.size(); ++i) {
    double gap = std::chrono::duration<double>(times[i] - times[i - 1]).count();
    EXPECT_GE(gap, 1.0 / 20.0 - 0.002) << "request " << i;
  }
}

TEST(RemoteTest, CacheAvoidsRepeatCalls) {
  RecordingTransport transport(scripted({kOk}));
  Registry registry;
  register_service(registry, sentiment("CachedService"), {transport.transport(), {}});
  Cache cache;
  ExecContext ctx;
  ctx.cache = &cache;
  for (int i = 0; i < 3; ++i) transform(registry, "CachedService", Stim(TextStim{{}, "same"}), ctx);
  EXPECT_EQ(transport.calls(), 1u);
  transform(registry, "CachedService", Stim(TextStim{{}, "same"}), ctx, {{"model", "emotion"}});
  EXPECT_EQ(transport.calls(), 2u);
}

TEST(RemoteTest, SpeechToTextConverter) {
  ServiceDescriptor d;
  d.name = "MockSpeech";
  d.base_url = "http://mock.invalid/stt";
  d.input_kind = StimKind::kAudio;
  d.request_encoding = RequestEncoding::kBase64MediaBody;
  d.word_rules = WordRules{"/words", "/w", "/start", "/len"};
  RecordingTransport transport(scripted(
      {{200, R"({"words": [{"w": "second", "start": 1.5}, {"w": "first", "start": 0.25, "len": 0.5}]})"}}));
  Registry registry;
  register_service(registry, d, {transport.transport(), {}});
  EXPECT_TRUE(registry.at("MockSpeech").is_converter());
  AudioStim audio = sine_audio(200.0, 8000, 2.0);
  audio.meta.onset = 1.0;
  auto out = transform(registry, "MockSpeech", Stim(audio));
  const auto& text = out.at(0).stims.at(0).as<ComplexTextStim>();
  ASSERT_EQ(text.elements.size(), 2u);
  EXPECT_EQ(text.elements[0].text, "first");
  EXPECT_EQ(*text.elements[0].meta.onset, 1.25);
  EXPECT_EQ(*text.elements[0].meta.duration, 0.5);
  EXPECT_EQ(*text.elements[1].meta.onset, 2.5);
}

TEST(ServiceDescriptorTest, JsonRoundTripAndValidation) {
  ServiceDescriptor d = sentiment("RoundTrip");
  d.auth = {AuthKind::kApiKeyQueryParam, "key"};
  ServiceDescriptor back = ServiceDescriptor::from_json(d.to_json());
  EXPECT_EQ(back.to_json(), d.to_json());

  auto bad = d.to_json();
  bad["auth"]["kind"] = "oauth";
  EXPECT_THROW(ServiceDescriptor::from_json(bad), Error);
  bad = d.to_json();
  bad["response_map"] = nlohmann::json::array();
  EXPECT_THROW(ServiceDescriptor::from_json(bad), Error);
  bad = d.to_json();
  bad["input_kind"] = "Image";  // json_text_body cannot carry images
  EXPECT_THROW(ServiceDescriptor::from_json(bad), Error);
  bad = d.to_json();
  bad.erase("base_url");
  EXPECT_THROW(ServiceDescriptor::from_json(bad), Error);
}

TEST(ServiceDescriptorTest, LoadsObjectOrArrayFiles) {
  TempDir dir;
  auto mocks = mock_service_descriptors();
  nlohmann::json all = nlohmann::json::array();
  for (const auto& m : mocks) all.push_back(m.to_json());
  write_file(dir / "all.json", all.dump());
  write_file(dir / "one.json", mocks[0].to_json().dump());
  EXPECT_EQ(load_service_descriptors((dir / "all.json").string()).size(), 3u);
  EXPECT_EQ(load_service_descriptors((dir / "one.json").string()).at(0).name, "ClarifaiAPIExtractor");
  write_file(dir / "broken.json", "{");
  EXPECT_THROW(load_service_descriptors((dir / "broken.json").string()), Error);
}

TEST(Base64Test, KnownVectors) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foo"), "Zm9v");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}
