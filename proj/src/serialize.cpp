#include "featflow/serialize.hpp"

#include <cstring>

#include "featflow/error.hpp"

namespace featflow {
using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json meta_to_json(const StimMeta& m) {
  json history = json::array();
  for (const auto& r : m.history) {
    history.push_back({{"name", r.transformer_name},
                       {"digest", r.parameter_digest},
                       {"in", static_cast<int>(r.input_type)},
                       {"out", static_cast<int>(r.output_type)}});
  }
  return {{"source", m.source_name ? json(*m.source_name) : json(nullptr)},
          {"onset", optional_number(m.onset)},
          {"duration", optional_number(m.duration)},
          {"order", m.order ? json(*m.order) : json(nullptr)},
          {"history", history}};
}

StimMeta meta_from_json(const json& j) {
  StimMeta m;
  if (!j.at("source").is_null()) m.source_name = j.at("source").get<std::string>();
  m.onset = read_optional_number(j.at("onset"));
  m.duration = read_optional_number(j.at("duration"));
  if (!j.at("order").is_null()) m.order = j.at("order").get<std::size_t>();
  for (const auto& r : j.at("history")) {
    m.history.push_back(TransformRecord{r.at("name").get<std::string>(),
                                        r.at("digest").get<std::string>(),
                                        static_cast<StimKind>(r.at("in").get<int>()),
                                        static_cast<StimKind>(r.at("out").get<int>())});
  }
  return m;
}

json samples_to_binary(const std::vector<double>& samples) {
  std::vector<std::uint8_t> bytes(samples.size() * sizeof(double));
  std::memcpy(bytes.data(), samples.data(), bytes.size());
  return json::binary(std::move(bytes));
}

std::vector<double> samples_from_binary(const json& j) {
  const auto& bytes = j.get_binary();
  if (bytes.size() % sizeof(double) != 0) {
    throw Error(ErrorCode::kCacheCorruption, "sample payload has a ragged length");
  }
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json image_to_json(const ImageStim& img) {
  return {{"meta", meta_to_json(img.meta)},
          {"width", img.width},
          {"height", img.height},
          {"pixels", json::binary(img.pixels)}};
}

ImageStim image_from_json(const json& j) {
  ImageStim img;
  img.meta = meta_from_json(j.at("meta"));
  img.width = j.at("width").get<int>();
  img.height = j.at("height").get<int>();
  img.pixels = j.at("pixels").get_binary();
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw Error(ErrorCode::kCacheCorruption, "image payload size does not match dimensions");
  }
  return img;
}

json audio_to_json(const AudioStim& a) {
  return {{"meta", meta_to_json(a.meta)},
          {"rate", a.sample_rate},
          {"samples", samples_to_binary(a.samples)},
          {"file", a.file_path ? json(*a.file_path) : json(nullptr)}};
}

AudioStim audio_from_json(const json& j) {
  AudioStim a;
  a.meta = meta_from_json(j.at("meta"));
  a.sample_rate = j.at("rate").get<int>();
  a.samples = samples_from_binary(j.at("samples"));
  if (!j.at("file").is_null()) a.file_path = j.at("file").get<std::string>();
  return a;
}

json text_to_json(const TextStim& t) {
  return {{"meta", meta_to_json(t.meta)}, {"text", t.text}};
}

TextStim text_from_json(const json& j) {
  return TextStim{meta_from_json(j.at("meta")), j.at("text").get<std::string>()};
}

json value_to_json(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return {{"n", *d}};
  if (const auto* s = std::get_if<std::string>(&v)) return {{"s", *s}};
  return json::object();
}

FeatureValue value_from_json(const json& j) {
  if (j.contains("n")) return j.at("n").get<double>();
  if (j.contains("s")) return j.at("s").get<std::string>();
  return std::monostate{};
}

}  // namespace

json stim_to_json(const Stim& stim) {
  json out = {{"kind", static_cast<int>(stim.kind())}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TextStim>) {
          out["body"] = text_to_json(p);
        } else if constexpr (std::is_same_v<T, AudioStim>) {
          out["body"] = audio_to_json(p);
        } else if constexpr (std::is_same_v<T, ImageStim>) {
          out["body"] = image_to_json(p);
        } else if constexpr (std::is_same_v<T, VideoFrameStim>) {
          out["body"] = {{"image", image_to_json(p.image)},
                         {"parent", p.parent_ref},
                         {"index", p.frame_index}};
        } else if constexpr (std::is_same_v<T, VideoStim>) {
          json frames = json::array();
          for (std::size_t i = 0; i < p.frame_count(); ++i) {
            frames.push_back(image_to_json(p.frames->decode(i)));
          }
          out["body"] = {{"meta", meta_to_json(p.meta)},
                         {"fps", p.fps},
                         {"frames", frames},
                         {"audio", p.audio_track ? audio_to_json(*p.audio_track) : json(nullptr)}};
        } else if constexpr (std::is_same_v<T, ComplexTextStim>) {
          json elements = json::array();
          for (const auto& e : p.elements) elements.push_back(text_to_json(e));
          out["body"] = {{"meta", meta_to_json(p.meta)}, {"elements", elements}};
        } else if constexpr (std::is_same_v<T, CompoundStim>) {
          json slots = json::array();
          for (const auto& s : p.slots) slots.push_back(stim_to_json(s));
          out["body"] = {{"meta", meta_to_json(p.meta)},
                         {"slots", slots},
                         {"dup", p.allow_duplicate_kinds}};
        }
      },
      stim.payload());
  return out;
}

Stim stim_from_json(const json& j) {
  const json& b = j.at("body");
  switch (static_cast<StimKind>(j.at("kind").get<int>())) {
    case StimKind::kText: return text_from_json(b);
    case StimKind::kAudio: return audio_from_json(b);
    case StimKind::kImage: return image_from_json(b);
    case StimKind::kVideoFrame:
      return VideoFrameStim{image_from_json(b.at("image")), b.at("parent").get<std::string>(),
                            b.at("index").get<std::size_t>()};
    case StimKind::kVideo: {
      VideoStim v;
      v.meta = meta_from_json(b.at("meta"));
      v.fps = b.at("fps").get<double>();
      std::vector<ImageStim> frames;
      for (const auto& f : b.at("frames")) frames.push_back(image_from_json(f));
      v.frames = std::make_shared<InMemoryFrames>(std::move(frames));
      if (!b.at("audio").is_null()) {
        v.audio_track = std::make_shared<const AudioStim>(audio_from_json(b.at("audio")));
      }
      return v;
    }
    case StimKind::kComplexText: {
      ComplexTextStim c;
      c.meta = meta_from_json(b.at("meta"));
      for (const auto& e : b.at("elements")) c.elements.push_back(text_from_json(e));
      return c;
    }
    case StimKind::kCompound: {
      CompoundStim c;
      c.meta = meta_from_json(b.at("meta"));
      for (const auto& s : b.at("slots")) c.slots.push_back(stim_from_json(s));
      c.allow_duplicate_kinds = b.at("dup").get<bool>();
      return c;
    }
  }
  throw Error(ErrorCode::kCacheCorruption, "unknown stim kind tag");
}

json result_to_json(const ExtractorResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json values = json::array();
    for (const auto& v : row.values) values.push_back(value_to_json(v));
    rows.push_back({{"onset", optional_number(row.onset)},
                    {"duration", optional_number(row.duration)},
                    {"values", values}});
  }
  return {{"features", r.features},
          {"rows", rows},
          {"stim", {{"id", r.stim_ref.stim_id},
                    {"kind", static_cast<int>(r.stim_ref.kind)},
                    {"history", r.stim_ref.history_length},
                    {"onset", optional_number(r.stim_ref.onset)},
                    {"duration", optional_number(r.stim_ref.duration)}}},
          {"extractor", {{"name", r.extractor_ref.name}, {"digest", r.extractor_ref.parameter_digest}}},
          {"raw", r.raw ? *r.raw : json(nullptr)},
          {"has_raw", r.raw.has_value()}};
}

ExtractorResult result_from_json(const json& j) {
  ExtractorResult r;
  r.features = j.at("features").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    ResultRow out;
    out.onset = read_optional_number(row.at("onset"));
    out.duration = read_optional_number(row.at("duration"));
    for (const auto& v : row.at("values")) out.values.push_back(value_from_json(v));
    r.rows.push_back(std::move(out));
  }
  const json& s = j.at("stim");
  r.stim_ref = StimRef{s.at("id").get<std::string>(), static_cast<StimKind>(s.at("kind").get<int>()),
                       s.at("history").get<std::size_t>(), read_optional_number(s.at("onset")),
                       read_optional_number(s.at("duration"))};
  r.extractor_ref = ExtractorRef{j.at("extractor").at("name").get<std::string>(),
                                 j.at("extractor").at("digest").get<std::string>()};
  if (j.at("has_raw").get<bool>()) r.raw = j.at("raw");
  return r;
}

std::string encode_output(const TransformOutput& output) {
  json stims = json::array();
  for (const auto& s : output.stims) stims.push_back(stim_to_json(s));
  json results = json::array();
  for (const auto& r : output.results) results.push_back(result_to_json(r));
  std::vector<std::uint8_t> cbor = json::to_cbor(json{{"stims", stims}, {"results", results}});
  return std::string(cbor.begin(), cbor.end());
}

TransformOutput decode_output(std::string_view bytes) {
  try {
    json j = json::from_cbor(bytes.begin(), bytes.end());
    TransformOutput out;
    for (const auto& s : j.at("stims")) out.stims.push_back(stim_from_json(s));
    for (const auto& r : j.at("results")) out.results.push_back(result_from_json(r));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCacheCorruption, std::string("cache entry does not decode: ") + e.what());
  }
}

}  // namespace featflow
