#include <gtest/gtest.h>

#include <cmath>

#include "featflow/builtins.hpp"
#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "fixtures.hpp"

using namespace featflow;
using namespace featflow::testing;

TEST(WavTest, RoundTripWithinQuantization) {
  AudioStim audio = sine_audio(440.0, 8000, 0.25, 0.8);
  AudioStim back = decode_wav(encode_wav(audio));
  EXPECT_EQ(back.sample_rate, 8000);
  ASSERT_EQ(back.samples.size(), audio.samples.size());
  for (std::size_t i = 0; i < audio.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], audio.samples[i], 1.0 / 32767.0);
  }
}

TEST(WavTest, RejectsGarbage) {
  EXPECT_THROW(decode_wav("RIFF...."), Error);
  EXPECT_THROW(decode_wav(""), Error);
}

TEST(PpmTest, RoundTripIsExact) {
  std::mt19937 rng(7);
  ImageStim image = random_image(5, 3, rng);
  ImageStim back = decode_ppm(encode_ppm(image));
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.pixels, image.pixels);
}

TEST(PpmTest, AcceptsCommentsInHeader) {
  std::string bytes = "P6\n# made by hand\n1 1\n255\n";
  bytes += std::string("\x01\x02\x03", 3);
  ImageStim image = decode_ppm(bytes);
  EXPECT_EQ(image.pixels, (std::vector<std::uint8_t>{1, 2, 3}));
  EXPECT_THROW(decode_ppm("P3\n1 1\n255\n1 2 3\n"), Error);
}

TEST(ManifestTest, WriteThenReadLazily) {
  TempDir dir;
  ClipOptions options;
  options.frames = 12;
  options.fps = 4.0;
  fs::path manifest = write_clip(dir.path(), "clip", options);
  Stim stim = load_stim(manifest);
  ASSERT_EQ(stim.kind(), StimKind::kVideo);
  const auto& video = stim.as<VideoStim>();
  EXPECT_EQ(video.frame_count(), 12u);
  EXPECT_DOUBLE_EQ(*video.meta.duration, 3.0);
  EXPECT_EQ(video.meta.source_name, manifest.string());
  ASSERT_TRUE(video.audio_track);
  EXPECT_EQ(video.audio_track->sample_rate, 16000);
  ASSERT_TRUE(video.audio_track->file_path.has_value());
  EXPECT_TRUE(fs::exists(transcript_sidecar_path(*video.audio_track->file_path)));
  VideoFrameStim f = video.frame(5);
  EXPECT_EQ(f.image.pixels[0], static_cast<std::uint8_t>(35));
}

TEST(LoadStimTest, DispatchesOnExtension) {
  TempDir dir;
  write_file(dir / "note.txt", "some words");
  write_wav(dir / "a.wav", sine_audio(100.0, 8000, 0.1));
  write_ppm(dir / "i.ppm", solid_image(2, 2, 1, 2, 3));
  EXPECT_EQ(load_stim(dir / "note.txt").kind(), StimKind::kText);
  EXPECT_EQ(load_stim(dir / "note.txt").as<TextStim>().text, "some words");
  EXPECT_EQ(load_stim(dir / "a.wav").kind(), StimKind::kAudio);
  EXPECT_EQ(load_stim(dir / "i.ppm").kind(), StimKind::kImage);
  EXPECT_EQ(load_stim(dir / "a.wav").meta().source_name, (dir / "a.wav").string());
}

TEST(LoadStimTest, MissingFileIsIoError) {
  try {
    load_stim("/nonexistent/featflow/clip.wav");
    FAIL() << "expected IoError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(LoadStimTest, UnknownExtensionWithoutHintIsUnknownFormat) {
  TempDir dir;
  write_file(dir / "thing.xyz", "??");
  try {
    load_stim(dir / "thing.xyz");
    FAIL() << "expected UnknownFormat";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownFormat);
  }
}
