#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "featflow/builtins.hpp"
#include "featflow/remote.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

AudioStim sine_audio(double hz, int sample_rate, double seconds, double amplitude = 1.0);
AudioStim silent_audio(int sample_rate, double seconds);
ImageStim solid_image(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
ImageStim random_image(int width, int height, std::mt19937& rng);

struct ClipOptions {
  double fps = 30.0;
  std::size_t frames = 300;
  int width = 4;
  int height = 4;
  bool with_audio = true;
  int sample_rate = 16000;
  double tone_hz = 440.0;
  std::vector<TimedWord> transcript = {{"hello", 0.5, 0.4}, {"world", 1.0, 0.5}};
};

// Writes a manifest video (frames, audio.wav, audio.transcript.json) into
// dir/name/ and returns the manifest path.
fs::path write_clip(const fs::path& dir, const std::string& name, const ClipOptions& options = {});

// Fixture dictionaries with hand-picked values.
//   SUBTLEXusfrequencyabove1 (index Word): hello 3.5, world 4.25, the 6.1
//   concreteness (index Word): hello 1.83, world 4.5, the 1.46
// Files go to dir/, a mirror copy to dir/mirror/, and the config (urls under
// http://mirror.invalid/) to dir/dictionaries.json, which is returned.
fs::path write_fixture_dictionaries(const fs::path& dir);

// Transport that answers from a handler and records every call.
class RecordingTransport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  explicit RecordingTransport(Handler handler) : handler_(std::move(handler)) {}

  Transport transport();
  std::size_t calls() const;
  std::vector<HttpRequest> requests() const;
  std::vector<std::chrono::steady_clock::time_point> times() const;

 private:
  Handler handler_;
  mutable std::mutex mutex_;
  std::vector<HttpRequest> requests_;
  std::vector<std::chrono::steady_clock::time_point> times_;
};

// Replies with the given responses in order, then repeats the last one.
RecordingTransport::Handler scripted(std::vector<HttpResponse> responses);

// Mock services standing in for the commercial APIs of the graph example,
// all at http://mock.invalid/<path> with no auth.
//   ClarifaiAPIExtractor: Image -> label, confidence
//   GoogleVisionAPIFaceExtractor: Image -> face_count
//   IndicoAPIExtractor: Text -> sentiment
std::vector<ServiceDescriptor> mock_service_descriptors();
// Deterministic answers for the mock services; sentiment is text length / 10.
HttpResponse mock_service_handler(const HttpRequest& request);

// Builtins, fixture dictionaries (may be null) and the mock services.
void register_fixture_registry(Registry& registry, std::shared_ptr<const DictionaryStore> dictionaries,
                               Transport transport);

// Fixture dictionaries written under `dir`, the mock services behind a
// recording transport, and a registry holding both plus the builtins.
struct FixtureWorld {
  explicit FixtureWorld(const fs::path& dir);
  FixtureWorld(const FixtureWorld&) = delete;
  FixtureWorld& operator=(const FixtureWorld&) = delete;

  std::shared_ptr<DictionaryStore> dictionaries;
  RecordingTransport transport{mock_service_handler};
  Registry registry;
};

// Source tree locations.
fs::path source_dir();
fs::path data_dir();
fs::path cli_path();

// Runs a command through the shell; returns the exit status and fills
// stdout/stderr from temp files.
struct CommandResult {
  int status = -1;
  std::string out;
  std::string err;
};
CommandResult run_command(const std::string& command);

std::string shell_quote(const std::string& s);

}  // namespace featflow::testing
