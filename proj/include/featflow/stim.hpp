#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace featflow {

enum class StimKind {
  kVideo,
  kAudio,
  kImage,
  kVideoFrame,
  kText,
  kComplexText,
  kCompound,
};

inline constexpr std::array<StimKind, 7> kAllStimKinds = {
    StimKind::kVideo, StimKind::kAudio,       StimKind::kImage,
    StimKind::kVideoFrame, StimKind::kText, StimKind::kComplexText,
    StimKind::kCompound};

std::string_view to_string(StimKind kind);

// Accepts the canonical names ("Video", "VideoFrame", ...) case-insensitively
// as well as snake_case spellings ("video_frame", "complex_text").
std::optional<StimKind> parse_stim_kind(std::string_view name);

// Reflexive; the only proper edge is VideoFrame <: Image.
bool is_subtype(StimKind kind, StimKind of);

// Kind produced by iter_elements for naturally iterable stims.
std::optional<StimKind> element_kind(StimKind kind);

bool accepts_kind(std::span<const StimKind> input_kinds, StimKind kind);

// True when `kind` is not accepted itself but each of its elements is.
bool accepts_elements_of(std::span<const StimKind> input_kinds, StimKind kind);

struct TransformRecord {
  std::string transformer_name;
  std::string parameter_digest;
  StimKind input_type = StimKind::kText;
  StimKind output_type = StimKind::kText;

  bool operator==(const TransformRecord&) const = default;
};

struct StimMeta {
  std::optional<std::string> source_name;
  // Seconds relative to the root input. Absent means "unaligned", which is
  // distinct from starting at zero.
  std::optional<double> onset;
  std::optional<double> duration;
  std::optional<std::size_t> order;
  std::vector<TransformRecord> history;

  // Throws InvalidParams when onset/duration are negative or non-finite.
  void validate() const;

  bool operator==(const StimMeta&) const = default;
};

struct TextStim {
  StimMeta meta;
  std::string text;

  bool operator==(const TextStim&) const = default;
};

struct AudioStim {
  StimMeta meta;
  int sample_rate = 0;
  std::vector<double> samples;  // mono, [-1, 1]
  // File the samples were decoded from, when any. Not part of the content.
  std::optional<std::string> file_path;

  double length_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }

  bool operator==(const AudioStim&) const = default;
};

struct ImageStim {
  StimMeta meta;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  bool operator==(const ImageStim&) const = default;
};

struct VideoFrameStim {
  ImageStim image;  // image.meta carries the frame's metadata
  std::string parent_ref;
  std::size_t frame_index = 0;

  bool operator==(const VideoFrameStim&) const = default;
};

// Decodes frames on demand. Implementations must be safe to call from
// several threads at once.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t frame_count() const = 0;
  // Returned image has empty metadata; VideoStim::frame fills it in.
  virtual ImageStim decode(std::size_t index) const = 0;
};

class InMemoryFrames final : public FrameSource {
 public:
  explicit InMemoryFrames(std::vector<ImageStim> frames)
      : frames_(std::move(frames)) {}

  std::size_t frame_count() const override { return frames_.size(); }
  ImageStim decode(std::size_t index) const override;

 private:
  std::vector<ImageStim> frames_;
};

struct VideoStim {
  StimMeta meta;
  double fps = 0.0;
  std::shared_ptr<const FrameSource> frames;
  std::shared_ptr<const AudioStim> audio_track;

  std::size_t frame_count() const { return frames ? frames->frame_count() : 0; }
  double length_seconds() const {
    return fps > 0 ? static_cast<double>(frame_count()) / fps : 0.0;
  }

  // Frame-start onset: parent onset (0 when unaligned) + index / fps.
  VideoFrameStim frame(std::size_t index) const;

  // Frame sources compare by identity; decoding to compare would defeat
  // laziness.
  bool operator==(const VideoStim& other) const;
};

class Stim;

struct ComplexTextStim {
  StimMeta meta;
  // Element onsets are absolute. Elements without an onset inherit the
  // container's onset when iterated.
  std::vector<TextStim> elements;

  bool operator==(const ComplexTextStim&) const = default;
};

struct CompoundStim {
  StimMeta meta;
  std::vector<Stim> slots;
  bool allow_duplicate_kinds = false;

  // Throws InvalidParams when a kind repeats and duplicates are not allowed.
  static CompoundStim make(StimMeta meta, std::vector<Stim> slots,
                           bool allow_duplicate_kinds = false);

  // First slot of the given kind, in insertion order.
  const Stim* find(StimKind kind) const;

  bool operator==(const CompoundStim& other) const;
};

// Immutable tagged union over every stimulus type.
class Stim {
 public:
  using Payload = std::variant<VideoStim, AudioStim, ImageStim, VideoFrameStim,
                               TextStim, ComplexTextStim, CompoundStim>;

  Stim(VideoStim v) : payload_(std::move(v)) {}
  Stim(AudioStim v) : payload_(std::move(v)) {}
  Stim(ImageStim v) : payload_(std::move(v)) {}
  Stim(VideoFrameStim v) : payload_(std::move(v)) {}
  Stim(TextStim v) : payload_(std::move(v)) {}
  Stim(ComplexTextStim v) : payload_(std::move(v)) {}
  Stim(CompoundStim v) : payload_(std::move(v)) {}

  StimKind kind() const;
  const StimMeta& meta() const;
  Stim with_meta(StimMeta meta) const;

  // Root identity used in result tables.
  std::string id() const { return meta().source_name.value_or(""); }

  const Payload& payload() const { return payload_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&payload_);
  }

  template <typename T>
  const T& as() const {
    return std::get<T>(payload_);
  }

  bool operator==(const Stim& other) const { return payload_ == other.payload_; }

 private:
  Payload payload_;
};

Stim append_history(const Stim& stim, TransformRecord record);

// Lazy, single-pass view over the elements of a stim. Elements are produced
// only when an iterator is dereferenced.
class ElementRange {
 public:
  using Factory = std::function<Stim(std::size_t)>;

  ElementRange(std::size_t count, Factory make)
      : count_(count), make_(std::move(make)) {}

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Stim;
    using difference_type = std::ptrdiff_t;
    using pointer = const Stim*;
    using reference = const Stim&;

    iterator() = default;
    iterator(const ElementRange* range, std::size_t index)
        : range_(range), index_(index) {}

    const Stim& operator*() const;
    const Stim* operator->() const { return &**this; }
    iterator& operator++() {
      ++index_;
      current_.reset();
      return *this;
    }
    void operator++(int) { ++*this; }

    friend bool operator==(const iterator& it, std::default_sentinel_t) {
      return it.index_ >= it.range_->size();
    }

   private:
    const ElementRange* range_ = nullptr;
    std::size_t index_ = 0;
    mutable std::optional<Stim> current_;
  };

  iterator begin() const { return iterator(this, 0); }
  std::default_sentinel_t end() const { return {}; }
  std::size_t size() const { return count_; }

 private:
  std::size_t count_;
  Factory make_;
};

// Video yields VideoFrameStims, ComplexText yields TextStims, anything else
// yields itself. Element onsets are absolute.
ElementRange iter_elements(const Stim& stim);

}  // namespace featflow
