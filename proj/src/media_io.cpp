#include "featflow/media_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "featflow/error.hpp"
#include "featflow/text.hpp"

namespace featflow {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower_extension(const fs::path& path) {
  return text::to_lower(path.extension().string());
}

std::uint32_t read_u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

[[noreturn]] void decode_error(const std::string& what) {
  throw Error(ErrorCode::kDecodeError, what);
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out += "'";
  return out;
}

Stim load_with_kind(const fs::path& path, StimKind kind) {
  switch (kind) {
    case StimKind::kAudio: {
      AudioStim audio = read_wav(path);
      return audio;
    }
    case StimKind::kImage: {
      ImageStim image = read_ppm(path);
      image.meta.source_name = path.string();
      return image;
    }
    case StimKind::kText: {
      std::string bytes = read_file(path);
      if (!text::decode_utf8(bytes)) decode_error(path.string() + ": not valid UTF-8");
      TextStim t;
      t.meta.source_name = path.string();
      t.text = std::move(bytes);
      return t;
    }
    case StimKind::kVideo:
      return read_manifest_video(path);
    default:
      throw Error(ErrorCode::kUnknownFormat,
                  path.string() + ": no decoder for kind " + std::string(to_string(kind)));
  }
}

Stim load_external(const fs::path& path, const std::string& command) {
  std::string pattern = (fs::temp_directory_path() / "featflow-decode-XXXXXX").string();
  std::vector<char> buf(pattern.begin(), pattern.end());
  buf.push_back('\0');
  if (::mkdtemp(buf.data()) == nullptr) {
    throw Error(ErrorCode::kIoError, "cannot create scratch directory for external decoder");
  }
  fs::path out_dir(buf.data());
  std::string cmd = command + " " + shell_quote(path.string()) + " " +
                    shell_quote(out_dir.string());
  int status = std::system(cmd.c_str());
  if (status != 0) {
    fs::remove_all(out_dir);
    decode_error(path.string() + ": external decoder exited with status " +
                 std::to_string(status));
  }
  auto relabel = [&](Stim stim) {
    StimMeta meta = stim.meta();
    meta.source_name = path.string();
    return stim.with_meta(std::move(meta));
  };
  if (fs::exists(out_dir / "manifest.json")) {
    VideoStim video = read_manifest_video(out_dir / "manifest.json");
    // Re-home the lazy frames so the scratch directory lives as long as they do.
    json manifest = json::parse(read_file(out_dir / "manifest.json"));
    std::vector<fs::path> frames;
    for (const auto& f : manifest.at("frames")) frames.push_back(out_dir / f.get<std::string>());
    video.frames = std::make_shared<ManifestFrames>(std::move(frames), out_dir);
    return relabel(std::move(video));
  }
  Stim result = [&]() -> Stim {
    if (fs::exists(out_dir / "audio.wav")) return read_wav(out_dir / "audio.wav");
    if (fs::exists(out_dir / "image.ppm")) return read_ppm(out_dir / "image.ppm");
    fs::remove_all(out_dir);
    decode_error(path.string() + ": external decoder produced no recognised output");
  }();
  fs::remove_all(out_dir);
  return relabel(std::move(result));
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

AudioStim decode_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    decode_error("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  bool have_fmt = false;
  std::string_view data;
  bool have_data = false;
  while (pos + 8 <= b.size()) {
    std::string_view id = b.substr(pos, 4);
    std::uint32_t size = read_u32(b, pos + 4);
    std::size_t body = pos + 8;
    if (body + size > b.size()) {
      if (id == "data") {
        decode_error("truncated data chunk");
      }
      decode_error("chunk '" + std::string(id) + "' overruns file");
    }
    if (id == "fmt ") {
      if (size < 16) decode_error("fmt chunk too short");
      std::uint16_t format = read_u16(b, body);
      channels = read_u16(b, body + 2);
      sample_rate = static_cast<int>(read_u32(b, body + 4));
      bits = read_u16(b, body + 14);
      bool extensible = format == 0xFFFE && size >= 26 && read_u16(b, body + 24) == 1;
      if (format != 1 && !extensible) decode_error("only PCM WAV is supported");
      have_fmt = true;
    } else if (id == "data") {
      data = b.substr(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || !have_data) decode_error("missing fmt or data chunk");
  if (bits != 16) decode_error("only 16-bit PCM is supported");
  if (channels < 1) decode_error("invalid channel count");
  if (sample_rate <= 0) decode_error("invalid sample rate");
  std::size_t frame_bytes = static_cast<std::size_t>(channels) * 2;
  std::size_t frames = data.size() / frame_bytes;
  AudioStim audio;
  audio.sample_rate = sample_rate;
  audio.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      auto raw = static_cast<std::int16_t>(read_u16(data, f * frame_bytes + 2 * c));
      acc += static_cast<double>(raw) / 32768.0;
    }
    audio.samples[f] = acc / channels;
  }
  audio.meta.duration = audio.length_seconds();
  return audio;
}

std::string encode_wav(const AudioStim& audio) {
  std::string out;
  std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : audio.samples) {
    double scaled = std::round(s * 32768.0);
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

AudioStim read_wav(const fs::path& path) {
  AudioStim audio;
  try {
    audio = decode_wav(read_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDecodeError) throw;
    decode_error(path.string() + ": " + e.what());
  }
  audio.meta.source_name = path.string();
  audio.file_path = path.string();
  return audio;
}

void write_wav(const fs::path& path, const AudioStim& audio) {
  write_file(path, encode_wav(audio));
}

ImageStim decode_ppm(std::string_view b) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(b[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space_and_comments();
    std::size_t start = pos;
    while (pos < b.size() && std::isdigit(static_cast<unsigned char>(b[pos]))) ++pos;
    if (start == pos) decode_error("malformed PPM header");
    return std::stol(std::string(b.substr(start, pos - start)));
  };
  if (b.size() < 2 || b.substr(0, 2) != "P6") decode_error("not a binary PPM (P6)");
  pos = 2;
  long width = read_int();
  long height = read_int();
  long maxval = read_int();
  if (width <= 0 || height <= 0) decode_error("PPM dimensions must be positive");
  if (maxval <= 0 || maxval > 255) decode_error("only 8-bit PPM is supported");
  if (pos >= b.size() || !std::isspace(static_cast<unsigned char>(b[pos]))) {
    decode_error("malformed PPM header");
  }
  ++pos;
  std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (b.size() - pos < expected) decode_error("truncated PPM pixel data");
  ImageStim image;
  image.width = static_cast<int>(width);
  image.height = static_cast<int>(height);
  image.pixels.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    auto v = static_cast<unsigned char>(b[pos + i]);
    image.pixels[i] = maxval == 255
                          ? v
                          : static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
  }
  return image;
}

std::string encode_ppm(const ImageStim& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

ImageStim read_ppm(const fs::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDecodeError) throw;
    decode_error(path.string() + ": " + e.what());
  }
}

void write_ppm(const fs::path& path, const ImageStim& image) {
  write_file(path, encode_ppm(image));
}

ManifestFrames::~ManifestFrames() {
  if (!owned_dir_.empty()) {
    std::error_code ec;
    fs::remove_all(owned_dir_, ec);
  }
}

ImageStim ManifestFrames::decode(std::size_t index) const {
  if (index >= paths_.size()) {
    decode_error("frame index " + std::to_string(index) + " out of range");
  }
  return read_ppm(paths_[index]);
}

VideoStim read_manifest_video(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    decode_error(manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("fps") || !manifest["fps"].is_number() ||
      !manifest.contains("frames") || !manifest["frames"].is_array()) {
    decode_error(manifest_path.string() + ": manifest needs numeric 'fps' and a 'frames' array");
  }
  double fps = manifest["fps"].get<double>();
  if (!(fps > 0.0) || !std::isfinite(fps)) decode_error(manifest_path.string() + ": fps must be positive");
  fs::path base = manifest_path.parent_path();
  std::vector<fs::path> frames;
  for (const auto& entry : manifest["frames"]) {
    if (!entry.is_string()) decode_error(manifest_path.string() + ": frame entries must be strings");
    frames.push_back(base / entry.get<std::string>());
  }
  VideoStim video;
  video.fps = fps;
  video.frames = std::make_shared<ManifestFrames>(std::move(frames));
  if (manifest.contains("audio") && !manifest["audio"].is_null()) {
    if (!manifest["audio"].is_string()) decode_error(manifest_path.string() + ": 'audio' must be a path or null");
    AudioStim track = read_wav(base / manifest["audio"].get<std::string>());
    track.meta.source_name = manifest_path.string();
    video.audio_track = std::make_shared<const AudioStim>(std::move(track));
  }
  video.meta.source_name = manifest_path.string();
  video.meta.duration = video.length_seconds();
  return video;
}

fs::path write_manifest_video(const fs::path& manifest_path, const VideoStim& video) {
  fs::path base = manifest_path.parent_path();
  json frames = json::array();
  for (std::size_t i = 0; i < video.frame_count(); ++i) {
    std::string name = "frame_" + std::to_string(i) + ".ppm";
    write_ppm(base / name, video.frames->decode(i));
    frames.push_back(name);
  }
  json manifest = {{"fps", video.fps}, {"frames", frames}, {"audio", nullptr}};
  if (video.audio_track) {
    write_wav(base / "audio.wav", *video.audio_track);
    manifest["audio"] = "audio.wav";
  }
  write_file(manifest_path, manifest.dump(2));
  return manifest_path;
}

Stim load_stim(const fs::path& path, std::optional<StimKind> kind_hint,
               const LoadOptions& options) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kIoError, path.string() + ": no such file");
  }
  std::string ext = lower_extension(path);
  std::optional<StimKind> kind;
  if (ext == ".wav") kind = StimKind::kAudio;
  else if (ext == ".ppm") kind = StimKind::kImage;
  else if (ext == ".txt") kind = StimKind::kText;
  else if (ext == ".json") kind = StimKind::kVideo;
  if (kind) return load_with_kind(path, *kind);

  std::optional<std::string> decoder = options.external_decoder;
  if (!decoder) {
    if (const char* env = std::getenv("FEATFLOW_EXTERNAL_DECODER"); env && *env) decoder = env;
  }
  if (kind_hint && (*kind_hint == StimKind::kAudio || *kind_hint == StimKind::kImage ||
                    *kind_hint == StimKind::kText || *kind_hint == StimKind::kVideo)) {
    // Hinted video with an unknown extension is most likely a real container.
    if (*kind_hint == StimKind::kVideo && decoder) return load_external(path, *decoder);
    return load_with_kind(path, *kind_hint);
  }
  if (decoder) return load_external(path, *decoder);
  throw Error(ErrorCode::kUnknownFormat,
              path.string() + ": unrecognised extension '" + ext + "' and no kind hint");
}

}  // namespace featflow
