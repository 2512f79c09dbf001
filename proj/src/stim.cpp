#include "featflow/stim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "featflow/error.hpp"

namespace featflow {

std::string_view to_string(StimKind kind) {
  switch (kind) {
    case StimKind::kVideo: return "Video";
    case StimKind::kAudio: return "Audio";
    case StimKind::kImage: return "Image";
    case StimKind::kVideoFrame: return "VideoFrame";
    case StimKind::kText: return "Text";
    case StimKind::kComplexText: return "ComplexText";
    case StimKind::kCompound: return "Compound";
  }
  return "?";
}

std::optional<StimKind> parse_stim_kind(std::string_view name) {
  std::string folded;
  for (char c : name) {
    if (c == '_' || c == '-') continue;
    folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (StimKind kind : kAllStimKinds) {
    std::string canonical;
    for (char c : to_string(kind)) {
      canonical.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (canonical == folded) return kind;
  }
  return std::nullopt;
}

bool is_subtype(StimKind kind, StimKind of) {
  return kind == of || (kind == StimKind::kVideoFrame && of == StimKind::kImage);
}

std::optional<StimKind> element_kind(StimKind kind) {
  switch (kind) {
    case StimKind::kVideo: return StimKind::kVideoFrame;
    case StimKind::kComplexText: return StimKind::kText;
    default: return std::nullopt;
  }
}

bool accepts_kind(std::span<const StimKind> input_kinds, StimKind kind) {
  return std::any_of(input_kinds.begin(), input_kinds.end(),
                     [&](StimKind k) { return is_subtype(kind, k); });
}

bool accepts_elements_of(std::span<const StimKind> input_kinds, StimKind kind) {
  if (accepts_kind(input_kinds, kind)) return false;
  auto element = element_kind(kind);
  return element && accepts_kind(input_kinds, *element);
}

void StimMeta::validate() const {
  auto check = [](const std::optional<double>& v, const char* what) {
    if (v && (!std::isfinite(*v) || *v < 0.0)) {
      throw Error(ErrorCode::kInvalidParams,
                  std::string("stim ") + what + " must be finite and >= 0");
    }
  };
  check(onset, "onset");
  check(duration, "duration");
}

ImageStim InMemoryFrames::decode(std::size_t index) const {
  if (index >= frames_.size()) {
    throw Error(ErrorCode::kDecodeError,
                "frame index " + std::to_string(index) + " out of range");
  }
  ImageStim out = frames_[index];
  out.meta = {};
  return out;
}

VideoFrameStim VideoStim::frame(std::size_t index) const {
  VideoFrameStim out;
  out.image = frames->decode(index);
  out.frame_index = index;
  out.parent_ref = meta.source_name.value_or("");
  StimMeta& m = out.image.meta;
  m.source_name = meta.source_name;
  m.onset = meta.onset.value_or(0.0) + static_cast<double>(index) / fps;
  m.duration = 1.0 / fps;
  m.order = index;
  m.history = meta.history;
  return out;
}

bool VideoStim::operator==(const VideoStim& other) const {
  auto audio_equal = [&] {
    if (!audio_track || !other.audio_track) return audio_track == other.audio_track;
    return *audio_track == *other.audio_track;
  };
  return meta == other.meta && fps == other.fps && frames == other.frames &&
         audio_equal();
}

CompoundStim CompoundStim::make(StimMeta meta, std::vector<Stim> slots,
                                bool allow_duplicate_kinds) {
  if (!allow_duplicate_kinds) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      for (std::size_t j = i + 1; j < slots.size(); ++j) {
        if (slots[i].kind() == slots[j].kind()) {
          throw Error(ErrorCode::kInvalidParams,
                      "compound stim holds two " +
                          std::string(to_string(slots[i].kind())) +
                          " slots; pass allow_duplicate_kinds to permit this");
        }
      }
    }
  }
  CompoundStim out;
  out.meta = std::move(meta);
  out.slots = std::move(slots);
  out.allow_duplicate_kinds = allow_duplicate_kinds;
  return out;
}

const Stim* CompoundStim::find(StimKind kind) const {
  for (const Stim& s : slots) {
    if (s.kind() == kind) return &s;
  }
  return nullptr;
}

bool CompoundStim::operator==(const CompoundStim& other) const {
  return meta == other.meta && slots == other.slots &&
         allow_duplicate_kinds == other.allow_duplicate_kinds;
}

StimKind Stim::kind() const {
  return static_cast<StimKind>(payload_.index());
}

const StimMeta& Stim::meta() const {
  return std::visit(
      [](const auto& p) -> const StimMeta& {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VideoFrameStim>) {
          return p.image.meta;
        } else {
          return p.meta;
        }
      },
      payload_);
}

Stim Stim::with_meta(StimMeta meta) const {
  Payload copy = payload_;
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VideoFrameStim>) {
          p.image.meta = std::move(meta);
        } else {
          p.meta = std::move(meta);
        }
      },
      copy);
  return std::visit([](auto&& p) { return Stim(std::move(p)); }, std::move(copy));
}

Stim append_history(const Stim& stim, TransformRecord record) {
  StimMeta meta = stim.meta();
  meta.history.push_back(std::move(record));
  return stim.with_meta(std::move(meta));
}

const Stim& ElementRange::iterator::operator*() const {
  if (!current_) current_.emplace(range_->make_(index_));
  return *current_;
}

ElementRange iter_elements(const Stim& stim) {
  if (const auto* video = stim.get_if<VideoStim>()) {
    return ElementRange(video->frame_count(), [video = *video](std::size_t i) {
      return Stim(video.frame(i));
    });
  }
  if (const auto* complex = stim.get_if<ComplexTextStim>()) {
    return ElementRange(complex->elements.size(),
                        [complex = *complex](std::size_t i) {
                          TextStim element = complex.elements[i];
                          if (!element.meta.onset) element.meta.onset = complex.meta.onset;
                          if (!element.meta.source_name) {
                            element.meta.source_name = complex.meta.source_name;
                          }
                          if (element.meta.history.empty()) {
                            element.meta.history = complex.meta.history;
                          }
                          element.meta.order = i;
                          return Stim(std::move(element));
                        });
  }
  return ElementRange(1, [stim](std::size_t) { return stim; });
}

}  // namespace featflow
