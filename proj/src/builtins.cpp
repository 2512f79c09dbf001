#include "featflow/builtins.hpp"

#include <algorithm>
#include <cmath>

#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "featflow/stft.hpp"
#include "featflow/text.hpp"

namespace featflow {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::kInvalidParams, why);
}

double luminance_difference(const ImageStim& a, const ImageStim& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frames are " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                    " and " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
  std::size_t pixels = static_cast<std::size_t>(a.width) * a.height;
  if (pixels == 0) return 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::uint8_t* x = &a.pixels[3 * p];
    const std::uint8_t* y = &b.pixels[3 * p];
    double la = (x[0] + x[1] + x[2]) / 3.0;
    double lb = (y[0] + y[1] + y[2]) / 3.0;
    total += std::abs(la - lb);
  }
  return total / static_cast<double>(pixels);
}

ResultRow difference_row(const VideoFrameStim& prev, const VideoFrameStim& next) {
  ResultRow row;
  row.onset = next.image.meta.onset;
  row.duration = next.image.meta.duration;
  row.values.push_back(luminance_difference(prev.image, next.image));
  return row;
}

const DictionaryStore& empty_store() {
  static const DictionaryStore store({}, {});
  return store;
}

}  // namespace

std::vector<VideoFrameStim> frame_sampling_convert(const VideoStim& video,
                                                   std::optional<double> hertz,
                                                   std::optional<double> every) {
  if (hertz && every) invalid("give either hertz or every, not both");
  std::size_t count = video.frame_count();
  std::vector<std::size_t> indices;
  if (hertz) {
    if (!(*hertz > 0.0)) invalid("hertz must be > 0");
    if (*hertz > video.fps) {
      invalid("hertz " + format_number(*hertz) + " exceeds the video's " +
              format_number(video.fps) + " fps");
    }
    for (std::size_t k = 0;; ++k) {
      auto index = static_cast<std::size_t>(std::llround(static_cast<double>(k) * video.fps / *hertz));
      if (index >= count) break;
      indices.push_back(index);
    }
  } else {
    double step = every.value_or(1.0);
    if (!(step >= 1.0) || step != std::floor(step)) invalid("every must be a positive integer");
    for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(step)) indices.push_back(i);
  }
  std::vector<VideoFrameStim> frames;
  frames.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    VideoFrameStim frame = video.frame(indices[k]);
    std::size_t end = k + 1 < indices.size() ? indices[k + 1] : count;
    frame.image.meta.duration = static_cast<double>(end - indices[k]) / video.fps;
    frame.image.meta.order = k;
    frames.push_back(std::move(frame));
  }
  return frames;
}

AudioStim video_to_audio_convert(const VideoStim& video) {
  if (!video.audio_track) {
    throw Error(ErrorCode::kNoAudioTrack,
                "video '" + video.meta.source_name.value_or("") + "' has no audio track");
  }
  AudioStim audio = *video.audio_track;
  audio.meta.onset = video.meta.onset;
  audio.meta.duration = audio.length_seconds();
  audio.meta.order.reset();
  return audio;
}

ComplexTextStim text_tokenize_convert(const TextStim& text) {
  ComplexTextStim out;
  out.meta.onset = text.meta.onset;
  out.meta.duration = text.meta.duration;
  std::size_t i = 0;
  for (std::string& token : text::tokenize_words(text.text)) {
    TextStim element;
    element.text = std::move(token);
    element.meta.order = i++;
    out.elements.push_back(std::move(element));
  }
  return out;
}

ExtractorResult length_extract(const TextStim& text) {
  ExtractorResult result;
  result.features = {"text_length"};
  ResultRow row;
  row.values.push_back(static_cast<double>(text::count_scalars(text::strip_whitespace(text.text))));
  result.rows.push_back(std::move(row));
  return result;
}

ComplexTextStim words_to_complex_text(const AudioStim& audio, std::vector<TimedWord> words) {
  std::stable_sort(words.begin(), words.end(),
                   [](const TimedWord& a, const TimedWord& b) { return a.onset < b.onset; });
  double base = audio.meta.onset.value_or(0.0);
  ComplexTextStim out;
  out.meta.onset = audio.meta.onset;
  out.meta.duration = audio.length_seconds();
  for (std::size_t i = 0; i < words.size(); ++i) {
    TextStim element;
    element.text = std::move(words[i].text);
    element.meta.onset = base + words[i].onset;
    element.meta.duration = words[i].duration;
    element.meta.order = i;
    element.meta.validate();
    out.elements.push_back(std::move(element));
  }
  return out;
}

fs::path transcript_sidecar_path(const fs::path& audio_path) {
  fs::path out = audio_path;
  out.replace_extension(".transcript.json");
  return out;
}

ComplexTextStim stub_transcribe(const AudioStim& audio) {
  if (!audio.file_path) {
    throw Error(ErrorCode::kIoError, "audio was not loaded from a file, so it has no transcript sidecar");
  }
  fs::path sidecar = transcript_sidecar_path(*audio.file_path);
  json j;
  try {
    j = json::parse(read_file(sidecar));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeError, sidecar.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kDecodeError, sidecar.string() + ": expected an array");
  std::vector<TimedWord> words;
  for (const json& w : j) {
    if (!w.is_object() || !w.contains("text") || !w["text"].is_string() || !w.contains("onset") ||
        !w["onset"].is_number()) {
      throw Error(ErrorCode::kDecodeError,
                  sidecar.string() + ": entries need a string text and a numeric onset");
    }
    TimedWord t{w["text"].get<std::string>(), w["onset"].get<double>(), std::nullopt};
    if (w.contains("duration") && w["duration"].is_number()) t.duration = w["duration"].get<double>();
    words.push_back(std::move(t));
  }
  return words_to_complex_text(audio, std::move(words));
}

ExtractorResult frame_difference_extract(std::span<const VideoFrameStim> frames) {
  if (frames.size() < 2) invalid("frame difference needs at least two frames");
  ExtractorResult result;
  result.features = {"frame_diff"};
  for (std::size_t i = 1; i < frames.size(); ++i) {
    result.rows.push_back(difference_row(frames[i - 1], frames[i]));
  }
  return result;
}

ExtractorResult frame_difference_extract(const VideoStim& video) {
  std::size_t count = video.frame_count();
  if (count < 2) invalid("frame difference needs at least two frames");
  ExtractorResult result;
  result.features = {"frame_diff"};
  VideoFrameStim prev = video.frame(0);
  for (std::size_t i = 1; i < count; ++i) {
    VideoFrameStim next = video.frame(i);
    result.rows.push_back(difference_row(prev, next));
    prev = std::move(next);
  }
  return result;
}

void register_builtins(Registry& registry, const BuiltinOptions& options) {
  auto converter = [](std::string name, StimKind in, StimKind out) {
    TransformerSpec spec;
    spec.name = std::move(name);
    spec.kind = TransformerKind::kConverter;
    spec.input_kinds = {in};
    spec.output_kind = out;
    return spec;
  };
  auto extractor = [](std::string name, StimKind in, ParamMap defaults = {}) {
    TransformerSpec spec;
    spec.name = std::move(name);
    spec.kind = TransformerKind::kExtractor;
    spec.input_kinds = {in};
    spec.parameters = std::move(defaults);
    return spec;
  };

  registry.add(converter(kVideoToAudioConverter, StimKind::kVideo, StimKind::kAudio),
               make_converter([](const Stim& s, const ParamMap&) {
                 return std::vector<Stim>{video_to_audio_convert(s.as<VideoStim>())};
               }));
  registry.add(converter(kAudioToTextConverter, StimKind::kAudio, StimKind::kComplexText),
               make_converter([](const Stim& s, const ParamMap&) {
                 return std::vector<Stim>{stub_transcribe(s.as<AudioStim>())};
               }));
  registry.add(converter(kFrameSamplingConverter, StimKind::kVideo, StimKind::kVideoFrame),
               make_converter([](const Stim& s, const ParamMap& p) {
                 std::vector<Stim> out;
                 for (VideoFrameStim& f : frame_sampling_convert(s.as<VideoStim>(),
                                                                 get_number(p, "hertz"),
                                                                 get_number(p, "every"))) {
                   out.emplace_back(std::move(f));
                 }
                 return out;
               }));
  registry.add(converter(kTextTokenizingConverter, StimKind::kText, StimKind::kComplexText),
               make_converter([](const Stim& s, const ParamMap&) {
                 return std::vector<Stim>{text_tokenize_convert(s.as<TextStim>())};
               }));

  registry.add(extractor(kLengthExtractor, StimKind::kText),
               make_extractor([](const Stim& s, const ParamMap&) {
                 return length_extract(s.as<TextStim>());
               }));
  auto store = options.dictionaries;
  registry.add(extractor(kPredefinedDictionaryExtractor, StimKind::kText),
               make_extractor([store](const Stim& s, const ParamMap& p) {
                 auto variables = get_string_list(p, "variables");
                 if (!variables) invalid("PredefinedDictionaryExtractor needs 'variables'");
                 return dictionary_extract(s.as<TextStim>(), store ? *store : empty_store(),
                                           *variables);
               }));
  registry.add(extractor(kStftAudioExtractor, StimKind::kAudio,
                         {{"hop_size", 0.1}, {"freq_bins", 5}, {"window", "hann"}}),
               make_extractor([](const Stim& s, const ParamMap& p) {
                 return stft_extract(s.as<AudioStim>(), StftParams::from_params(p));
               }));
  registry.add(extractor(kFrameDifferenceExtractor, StimKind::kVideo),
               make_extractor([](const Stim& s, const ParamMap&) {
                 return frame_difference_extract(s.as<VideoStim>());
               }));
}

}  // namespace featflow
