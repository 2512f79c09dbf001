#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "featflow/stim.hpp"

namespace featflow {

struct LoadOptions {
  // Command used for containers we cannot parse (mp4, mp3, ...). It is run
  // as `<command> <input> <output-dir>` and must leave manifest.json,
  // audio.wav or image.ppm in the output directory. Falls back to the
  // FEATFLOW_EXTERNAL_DECODER environment variable when unset.
  std::optional<std::string> external_decoder;
};

// Dispatches on extension (.wav, .ppm, .txt, .json), then on `kind_hint`.
Stim load_stim(const std::filesystem::path& path,
               std::optional<StimKind> kind_hint = std::nullopt,
               const LoadOptions& options = {});

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// 16-bit PCM. Multi-channel input is downmixed by averaging channels.
AudioStim decode_wav(std::string_view bytes);
std::string encode_wav(const AudioStim& audio);
AudioStim read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioStim& audio);

// Binary P6 only.
ImageStim decode_ppm(std::string_view bytes);
std::string encode_ppm(const ImageStim& image);
ImageStim read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageStim& image);

// {"fps": n, "frames": ["f0.ppm", ...], "audio": "track.wav" | null}, paths
// relative to the manifest. Frames are decoded on demand.
VideoStim read_manifest_video(const std::filesystem::path& manifest);

// Writes frames as frame_<i>.ppm, the audio track as audio.wav and the
// manifest itself to `manifest`. Returns the manifest path.
std::filesystem::path write_manifest_video(const std::filesystem::path& manifest,
                                           const VideoStim& video);

// Manifest-backed frame source, exposed for tests that count decodes.
class ManifestFrames final : public FrameSource {
 public:
  explicit ManifestFrames(std::vector<std::filesystem::path> paths,
                          std::filesystem::path owned_dir = {})
      : paths_(std::move(paths)), owned_dir_(std::move(owned_dir)) {}
  ~ManifestFrames() override;

  std::size_t frame_count() const override { return paths_.size(); }
  ImageStim decode(std::size_t index) const override;

 private:
  std::vector<std::filesystem::path> paths_;
  // Scratch directory created by an external decoder; removed with us.
  std::filesystem::path owned_dir_;
};

}  // namespace featflow
