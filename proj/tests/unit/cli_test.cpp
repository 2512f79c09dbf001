#include <gtest/gtest.h>

#include <algorithm>

#include "featflow/media_io.hpp"
#include "fixtures.hpp"

using namespace featflow;
using namespace featflow::testing;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_fixture_dictionaries(dir.path());
    fs::create_directories(dir / "res");
  }

  // Keeps the run away from the bundled resources and the user's cache.
  std::string common() const {
    return " --resource-dir " + shell_quote((dir / "res").string()) + " --resource-cache " +
           shell_quote((dir / "rcache").string());
  }

  CommandResult cli(const std::string& args) const {
    return run_command(shell_quote(cli_path().string()) + " " + args);
  }

  fs::path write_spec(const std::string& name, const std::string& json) const {
    fs::path p = dir / name;
    write_file(p, json);
    return p;
  }

  TempDir dir;
};

}  // namespace

TEST_F(CliTest, RunsSpeechBandGraphToWideCsv) {
  fs::path clip = write_clip(dir.path(), "clip");
  CommandResult r = cli("run --graph " + shell_quote((data_dir() / "speech_band_graph.json").string()) +
                        " --input " + shell_quote(clip.string()) + " --format wide_csv" + common());
  ASSERT_EQ(r.status, 0) << r.err;
  std::string header = r.out.substr(0, r.out.find('\n'));
  EXPECT_EQ(header, "stim_id,onset,STFTAudioExtractor.power_60_250hz");
  // Ten one-second hops.
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 11);
}

TEST_F(CliTest, OutputIsDeterministic) {
  fs::path clip = write_clip(dir.path(), "clip");
  ClipOptions quiet;
  quiet.tone_hz = 1000.0;
  quiet.transcript = {{"hi", 0.2, 0.1}};
  fs::path other = write_clip(dir.path(), "other", quiet);
  fs::path spec = write_spec("g.json", R"({"nodes": [{"transformer": "LengthExtractor"},
    {"transformer": "STFTAudioExtractor", "parameters": {"hop_size": 1}}]})");
  std::string args = "run --graph " + shell_quote(spec.string()) + " --input " + shell_quote(clip.string()) +
                     " --input " + shell_quote(other.string()) + common();
  CommandResult a = cli(args + " --output " + shell_quote((dir / "a.csv").string()));
  CommandResult b = cli(args + " --parallel --output " + shell_quote((dir / "b.csv").string()));
  ASSERT_EQ(a.status, 0) << a.err;
  ASSERT_EQ(b.status, 0) << b.err;
  std::string csv = read_file(dir / "a.csv");
  EXPECT_EQ(csv, read_file(dir / "b.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "stim_id,extractor,feature,onset,duration,value");
  EXPECT_NE(csv.find(",LengthExtractor,text_length,0.5,0.4,5\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find(",LengthExtractor,text_length,0.2,0.1,2\n"), std::string::npos) << csv;
}

TEST_F(CliTest, WarmCacheDirReportsHits) {
  fs::path clip = write_clip(dir.path(), "clip");
  std::string args = "run --graph " + shell_quote((data_dir() / "speech_band_graph.json").string()) +
                     " --input " + shell_quote(clip.string()) + " --cache-dir " +
                     shell_quote((dir / "cache").string()) + common();
  CommandResult cold = cli(args);
  ASSERT_EQ(cold.status, 0) << cold.err;
  EXPECT_NE(cold.err.find(" 0 cache hits"), std::string::npos) << cold.err;
  CommandResult warm = cli(args);
  ASSERT_EQ(warm.status, 0) << warm.err;
  EXPECT_EQ(warm.out, cold.out);
  EXPECT_EQ(warm.err.find(" 0 cache hits"), std::string::npos) << warm.err;
}

TEST_F(CliTest, ExitCodes) {
  fs::path spec = write_spec("stft.json", R"({"nodes": [{"transformer": "STFTAudioExtractor"}]})");
  AudioStim tiny = sine_audio(100.0, 8000, 0.01);
  write_wav(dir / "tiny.wav", tiny);

  CommandResult failure = cli("run --graph " + shell_quote(spec.string()) + " --input " +
                              shell_quote((dir / "tiny.wav").string()) + common());
  EXPECT_EQ(failure.status, 1);
  EXPECT_NE(failure.err.find("STFTAudioExtractor#0"), std::string::npos) << failure.err;

  CommandResult skipped = cli("run --skip-errors --graph " + shell_quote(spec.string()) + " --input " +
                              shell_quote((dir / "tiny.wav").string()) + common());
  EXPECT_EQ(skipped.status, 0) << skipped.err;
  EXPECT_NE(skipped.err.find("warning"), std::string::npos);

  fs::path missing = dir / "nowhere" / "gone.wav";
  CommandResult no_input =
      cli("run --graph " + shell_quote(spec.string()) + " --input " + shell_quote(missing.string()) + common());
  EXPECT_EQ(no_input.status, 2);
  EXPECT_NE(no_input.err.find(missing.string()), std::string::npos) << no_input.err;

  fs::path unknown = write_spec("unknown.json", R"({"nodes": [{"transformer": "NoSuchExtractor"}]})");
  EXPECT_EQ(cli("graph --graph " + shell_quote(unknown.string()) + " --input-kind video" + common()).status, 2);

  fs::path cyclic = write_spec("cyclic.json", R"({"nodes": [
    {"id": "self", "transformer": "TextTokenizingConverter", "children": ["self"]}]})");
  EXPECT_EQ(cli("graph --graph " + shell_quote(cyclic.string()) + " --input-kind text" + common()).status, 2);

  EXPECT_EQ(cli("run --graph").status, 2);
  EXPECT_EQ(cli("graph --graph " + shell_quote(spec.string()) + " --input-kind audio --prefer A --ban A" +
                common()).status,
            2);
}

TEST_F(CliTest, GraphCommandWritesDot) {
  fs::path spec = write_spec("len.json", R"({"nodes": [{"transformer": "LengthExtractor"}]})");
  CommandResult r = cli("graph --graph " + shell_quote(spec.string()) + " --input-kind video" + common());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("digraph featflow {\n", 0), 0u);
  EXPECT_NE(r.out.find("style=dashed"), std::string::npos);
}

TEST_F(CliTest, ResourcesListShowsBundledAoa) {
  CommandResult r = cli("resources list aoa --resource-dir " +
                        shell_quote((source_dir() / "resources").string()));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("Age-of-acquisition (AoA) norms for over 50 thousand English words"), std::string::npos);
  EXPECT_EQ(cli("resources list nosuch" + common()).status, 2);
}

TEST_F(CliTest, ResourcesFetchFromFileMirror) {
  std::string env = "FEATFLOW_RESOURCE_BASE_URL=" + shell_quote("file://" + (dir / "mirror").string()) + " ";
  CommandResult r = run_command(env + shell_quote(cli_path().string()) + " resources fetch concreteness" +
                                " --dictionaries " + shell_quote((dir / "dictionaries.json").string()) +
                                common());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(read_file(dir / "rcache" / "concreteness.csv"), read_file(dir / "mirror" / "concreteness.csv"));
}
