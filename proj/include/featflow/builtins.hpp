#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featflow/dictionary.hpp"
#include "featflow/result.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Registered names.
inline constexpr char kFrameSamplingConverter[] = "FrameSamplingConverter";
inline constexpr char kVideoToAudioConverter[] = "VideoToAudioConverter";
inline constexpr char kAudioToTextConverter[] = "AudioToTextConverter";
inline constexpr char kTextTokenizingConverter[] = "TextTokenizingConverter";
inline constexpr char kLengthExtractor[] = "LengthExtractor";
inline constexpr char kPredefinedDictionaryExtractor[] = "PredefinedDictionaryExtractor";
inline constexpr char kStftAudioExtractor[] = "STFTAudioExtractor";
inline constexpr char kFrameDifferenceExtractor[] = "FrameDifferenceExtractor";

// Exactly one of hertz / every may be given; neither means every frame.
// hertz picks indices round(k * fps / hertz); each frame lasts until the
// next sampled one, the last until the end of the video. Throws
// InvalidParams.
std::vector<VideoFrameStim> frame_sampling_convert(const VideoStim& video,
                                                   std::optional<double> hertz,
                                                   std::optional<double> every);

// The audio track with the video's onset. Throws NoAudioTrack.
AudioStim video_to_audio_convert(const VideoStim& video);

// Whitespace split, edge punctuation stripped, empty tokens dropped.
ComplexTextStim text_tokenize_convert(const TextStim& text);

// Characters (Unicode scalar values) of the whitespace-stripped text.
ExtractorResult length_extract(const TextStim& text);

struct TimedWord {
  std::string text;
  double onset = 0.0;  // seconds from the start of the audio
  std::optional<double> duration;
};

// Shifts word onsets by the audio's onset and sorts them (stable).
ComplexTextStim words_to_complex_text(const AudioStim& audio, std::vector<TimedWord> words);

// clip.wav -> clip.transcript.json
std::filesystem::path transcript_sidecar_path(const std::filesystem::path& audio_path);

// Deterministic stand-in for speech recognition: reads the sidecar
// transcript [{"text", "onset", "duration"}, ...] next to the audio file.
// Throws IoError, DecodeError.
ComplexTextStim stub_transcribe(const AudioStim& audio);

// Mean absolute luminance difference, luminance = (R+G+B)/3, per
// consecutive pair; onset of the later frame. Throws DimensionMismatch,
// InvalidParams (fewer than two frames).
ExtractorResult frame_difference_extract(std::span<const VideoFrameStim> frames);
// Same over every frame of a video, decoding two frames at a time.
ExtractorResult frame_difference_extract(const VideoStim& video);

struct BuiltinOptions {
  // Backs PredefinedDictionaryExtractor; without one every lookup reports
  // UnknownResource.
  std::shared_ptr<const DictionaryStore> dictionaries;
};

void register_builtins(Registry& registry, const BuiltinOptions& options = {});

}  // namespace featflow
