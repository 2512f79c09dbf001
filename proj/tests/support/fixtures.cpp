#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include <json.hpp>

#include "featflow/error.hpp"
#include "featflow/media_io.hpp"

#ifndef FEATFLOW_SOURCE_DIR
#error "FEATFLOW_SOURCE_DIR must be defined"
#endif
#ifndef FEATFLOW_CLI_PATH
#define FEATFLOW_CLI_PATH "featflow"
#endif

namespace featflow::testing {

using nlohmann::json;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("featflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

AudioStim sine_audio(double hz, int sample_rate, double seconds, double amplitude) {
  AudioStim audio;
  audio.sample_rate = sample_rate;
  auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    audio.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sample_rate);
  }
  return audio;
}

AudioStim silent_audio(int sample_rate, double seconds) {
  return sine_audio(0.0, sample_rate, seconds, 0.0);
}

ImageStim solid_image(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageStim image;
  image.width = width;
  image.height = height;
  image.pixels.reserve(static_cast<std::size_t>(width) * height * 3);
  for (int p = 0; p < width * height; ++p) {
    image.pixels.push_back(r);
    image.pixels.push_back(g);
    image.pixels.push_back(b);
  }
  return image;
}

ImageStim random_image(int width, int height, std::mt19937& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  ImageStim image;
  image.width = width;
  image.height = height;
  image.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (auto& v : image.pixels) v = static_cast<std::uint8_t>(byte(rng));
  return image;
}

fs::path write_clip(const fs::path& dir, const std::string& name, const ClipOptions& options) {
  fs::path clip_dir = dir / name;
  fs::create_directories(clip_dir);
  std::vector<ImageStim> frames;
  frames.reserve(options.frames);
  for (std::size_t i = 0; i < options.frames; ++i) {
    auto level = static_cast<std::uint8_t>((i * 7) % 256);
    frames.push_back(solid_image(options.width, options.height, level, level / 2, 255 - level));
  }
  VideoStim video;
  video.fps = options.fps;
  video.frames = std::make_shared<InMemoryFrames>(std::move(frames));
  if (options.with_audio) {
    double seconds = static_cast<double>(options.frames) / options.fps;
    video.audio_track = std::make_shared<const AudioStim>(
        sine_audio(options.tone_hz, options.sample_rate, seconds, 0.5));
  }
  fs::path manifest = write_manifest_video(clip_dir / (name + ".json"), video);
  if (options.with_audio) {
    json words = json::array();
    for (const TimedWord& w : options.transcript) {
      json entry = {{"text", w.text}, {"onset", w.onset}};
      if (w.duration) entry["duration"] = *w.duration;
      words.push_back(entry);
    }
    write_file(transcript_sidecar_path(clip_dir / "audio.wav"), words.dump(2));
  }
  return manifest;
}

fs::path write_fixture_dictionaries(const fs::path& dir) {
  const std::string subtlex =
      "Word,FREQcount,Lg10WF\n"
      "hello,3162,3.5\n"
      "world,17783,4.25\n"
      "the,1258925,6.1\n";
  const std::string concreteness =
      "Word,Conc.M,Dom_Pos\n"
      "hello,1.83,Interjection\n"
      "world,4.5,Noun\n"
      "the,1.46,Article\n";
  fs::create_directories(dir / "mirror");
  for (const fs::path& base : {dir, dir / "mirror"}) {
    write_file(base / "SUBTLEXusfrequencyabove1.csv", subtlex);
    write_file(base / "concreteness.csv", concreteness);
  }
  json config = {
      {"SUBTLEXusfrequencyabove1",
       {{"title", "SUBTLEXus word frequencies"},
        {"description_url", "http://mirror.invalid/subtlex"},
        {"source", "fixture"},
        {"url", "http://mirror.invalid/SUBTLEXusfrequencyabove1.csv"},
        {"format", "csv"},
        {"language", "english"},
        {"index", "Word"}}},
      {"concreteness",
       {{"title", "Concreteness ratings"},
        {"description_url", "http://mirror.invalid/concreteness"},
        {"source", "fixture"},
        {"url", "http://mirror.invalid/concreteness.csv"},
        {"format", "csv"},
        {"language", "english"},
        {"index", "Word"}}},
  };
  fs::path path = dir / "dictionaries.json";
  write_file(path, config.dump(2));
  return path;
}

Transport RecordingTransport::transport() {
  return [this](const HttpRequest& request) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      requests_.push_back(request);
      times_.push_back(std::chrono::steady_clock::now());
    }
    return handler_(request);
  };
}

std::size_t RecordingTransport::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return requests_.size();
}

std::vector<HttpRequest> RecordingTransport::requests() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return requests_;
}

std::vector<std::chrono::steady_clock::time_point> RecordingTransport::times() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return times_;
}

RecordingTransport::Handler scripted(std::vector<HttpResponse> responses) {
  auto next = std::make_shared<std::atomic<std::size_t>>(0);
  return [responses = std::move(responses), next](const HttpRequest&) {
    std::size_t i = next->fetch_add(1);
    return responses[std::min(i, responses.size() - 1)];
  };
}

std::vector<ServiceDescriptor> mock_service_descriptors() {
  ServiceDescriptor clarifai;
  clarifai.name = "ClarifaiAPIExtractor";
  clarifai.base_url = "http://mock.invalid/clarifai";
  clarifai.input_kind = StimKind::kImage;
  clarifai.request_encoding = RequestEncoding::kBase64MediaBody;
  clarifai.response_map = {{"/labels/0/name", "label"}, {"/labels/0/value", "confidence"}};
  clarifai.rate_limit = 1000.0;

  ServiceDescriptor faces;
  faces.name = "GoogleVisionAPIFaceExtractor";
  faces.base_url = "http://mock.invalid/faces";
  faces.input_kind = StimKind::kImage;
  faces.request_encoding = RequestEncoding::kBase64MediaBody;
  faces.response_map = {{"/face_count", "face_count"}};
  faces.rate_limit = 1000.0;

  ServiceDescriptor indico;
  indico.name = "IndicoAPIExtractor";
  indico.base_url = "http://mock.invalid/indico";
  indico.input_kind = StimKind::kText;
  indico.request_encoding = RequestEncoding::kJsonTextBody;
  indico.model = "sentiment";
  indico.response_map = {{"/results/sentiment", "sentiment"}};
  indico.rate_limit = 1000.0;
  return {clarifai, faces, indico};
}

HttpResponse mock_service_handler(const HttpRequest& request) {
  json body = json::parse(request.body);
  if (request.url.ends_with("/clarifai")) {
    double size = static_cast<double>(body["data"].get<std::string>().size());
    return {200, json{{"labels", {{{"name", "shape"}, {"value", size / 1000.0}}}}}.dump()};
  }
  if (request.url.ends_with("/faces")) {
    return {200, json{{"face_count", 0}}.dump()};
  }
  if (request.url.ends_with("/indico")) {
    double length = static_cast<double>(body["text"].get<std::string>().size());
    return {200, json{{"results", {{"sentiment", length / 10.0}}}}.dump()};
  }
  return {404, "no such mock service"};
}

void register_fixture_registry(Registry& registry, std::shared_ptr<const DictionaryStore> dictionaries,
                               Transport transport) {
  BuiltinOptions builtins;
  builtins.dictionaries = std::move(dictionaries);
  register_builtins(registry, builtins);
  for (const ServiceDescriptor& d : mock_service_descriptors()) {
    register_service(registry, d, RemoteOptions{transport, [](std::chrono::duration<double>) {}});
  }
}

FixtureWorld::FixtureWorld(const fs::path& dir) {
  DictionaryStoreOptions options;
  options.resource_dir = dir;
  options.cache_dir = dir / "fetched";
  dictionaries = std::make_shared<DictionaryStore>(
      load_dictionary_config(write_fixture_dictionaries(dir)), options);
  register_fixture_registry(registry, dictionaries, transport.transport());
}

fs::path source_dir() { return FEATFLOW_SOURCE_DIR; }
fs::path data_dir() { return source_dir() / "tests" / "data"; }
fs::path cli_path() { return FEATFLOW_CLI_PATH; }

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

CommandResult run_command(const std::string& command) {
  TempDir dir;
  fs::path out = dir / "stdout";
  fs::path err = dir / "stderr";
  std::string full = command + " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  int raw = std::system(full.c_str());
  CommandResult result;
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  if (fs::exists(out)) result.out = read_file(out);
  if (fs::exists(err)) result.err = read_file(err);
  return result;
}

}  // namespace featflow::testing
