#include <gtest/gtest.h>

#include <atomic>
#include <barrier>
#include <thread>

#include "featflow/cache.hpp"
#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "featflow/serialize.hpp"
#include "fixtures.hpp"

namespace featflow {

// Reaches into a cache to damage stored bytes.
struct CacheInspector {
  static void flip_byte(Cache& cache, const CacheKey& key) {
    std::lock_guard<std::mutex> lock(cache.mutex_);
    auto& bytes = cache.slots_.at(key.digest())->bytes;
    bytes[bytes.size() / 2] ^= 0x5A;
  }
};

}  // namespace featflow

using namespace featflow;
using namespace featflow::testing;

namespace {

TransformOutput text_output(const std::string& s) {
  TransformOutput out;
  ExtractorResult r;
  r.features = {"v"};
  r.rows.push_back({1.0, 0.5, {s}});
  out.results.push_back(r);
  out.stims.push_back(TextStim{{}, s});
  return out;
}

CacheKey key_for(const std::string& stim_text) {
  return CacheKey{"T", "1", parameter_digest({}), stim_digest(TextStim{{}, stim_text})};
}

}  // namespace

TEST(StimDigestTest, ContentAndTimingOnly) {
  TextStim a{{}, "same"};
  TextStim b = a;
  b.meta.source_name = "elsewhere";
  b.meta.order = 9;
  b.meta.history.push_back({"X", "d", StimKind::kText, StimKind::kText});
  EXPECT_EQ(stim_digest(a), stim_digest(b));
  b.meta.onset = 1.0;
  EXPECT_NE(stim_digest(a), stim_digest(b));
  EXPECT_NE(stim_digest(TextStim{{}, "same"}), stim_digest(TextStim{{}, "diff"}));
  // Kind is part of the digest.
  ComplexTextStim c;
  c.elements = {a};
  EXPECT_NE(stim_digest(a), stim_digest(c));
}

TEST(CacheKeyTest, EveryFieldMatters) {
  CacheKey base{"T", "1", "p", "s"};
  for (int i = 0; i < 4; ++i) {
    CacheKey k = base;
    (i == 0 ? k.transformer_name : i == 1 ? k.transformer_version : i == 2 ? k.parameter_digest : k.stim_digest) += "x";
    EXPECT_NE(k.digest(), base.digest()) << i;
  }
}

TEST(CacheTest, HitReturnsEqualOutput) {
  Cache cache;
  int calls = 0;
  auto produce = [&] {
    ++calls;
    return text_output("v");
  };
  TransformOutput first = cache.get_or_compute(key_for("a"), produce);
  TransformOutput second = cache.get_or_compute(key_for("a"), produce);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(first, second);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_TRUE(cache.contains(key_for("a")));
  EXPECT_FALSE(cache.contains(key_for("b")));
}

TEST(CacheTest, ErrorsAreNotCached) {
  Cache cache;
  int calls = 0;
  auto failing = [&]() -> TransformOutput {
    ++calls;
    throw Error(ErrorCode::kServiceError, "down");
  };
  EXPECT_THROW(cache.get_or_compute(key_for("a"), failing), Error);
  EXPECT_THROW(cache.get_or_compute(key_for("a"), failing), Error);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(CacheTest, ConcurrentFirstRequestsRunOnce) {
  Cache cache;
  std::atomic<int> calls{0};
  constexpr int kThreads = 16;
  std::barrier start(kThreads);
  std::vector<std::thread> threads;
  std::vector<TransformOutput> outputs(kThreads);
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      start.arrive_and_wait();
      outputs[t] = cache.get_or_compute(key_for("shared"), [&] {
        calls.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        return text_output("once");
      });
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(calls.load(), 1);
  for (const auto& o : outputs) EXPECT_EQ(o, text_output("once"));
}

TEST(CacheTest, CorruptEntryIsEvictedAndRecomputed) {
  Cache cache;
  int calls = 0;
  auto produce = [&] {
    ++calls;
    return text_output("fresh");
  };
  cache.get_or_compute(key_for("a"), produce);
  CacheInspector::flip_byte(cache, key_for("a"));
  TransformOutput out = cache.get_or_compute(key_for("a"), produce);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(out, text_output("fresh"));
  EXPECT_EQ(cache.corruptions(), 1u);
  cache.get_or_compute(key_for("a"), produce);
  EXPECT_EQ(calls, 2);
}

TEST(CacheTest, PersistAndLoad) {
  TempDir dir;
  {
    Cache cache;
    cache.get_or_compute(key_for("a"), [] { return text_output("A"); });
    cache.get_or_compute(key_for("b"), [] { return text_output("B"); });
    cache.persist(dir.path());
  }
  std::vector<std::string> warnings;
  auto loaded = load_cache(dir.path(), &warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(loaded->size(), 2u);
  int calls = 0;
  TransformOutput out = loaded->get_or_compute(key_for("b"), [&] {
    ++calls;
    return text_output("recomputed");
  });
  EXPECT_EQ(calls, 0);
  EXPECT_EQ(out, text_output("B"));
}

TEST(CacheTest, TruncatedEntryOnDiskIsSkipped) {
  TempDir dir;
  {
    Cache cache;
    cache.get_or_compute(key_for("a"), [] { return text_output("A"); });
    cache.get_or_compute(key_for("b"), [] { return text_output("B"); });
    cache.persist(dir.path());
  }
  fs::path victim = dir / (key_for("a").digest() + ".entry");
  std::string bytes = read_file(victim);
  write_file(victim, bytes.substr(0, bytes.size() / 2));
  std::vector<std::string> warnings;
  auto loaded = load_cache(dir.path(), &warnings);
  EXPECT_EQ(loaded->size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("checksum"), std::string::npos);
  int calls = 0;
  loaded->get_or_compute(key_for("a"), [&] {
    ++calls;
    return text_output("A");
  });
  EXPECT_EQ(calls, 1);
}

TEST(SerializeTest, OutputRoundTripsThroughCbor) {
  TransformOutput out = text_output("x");
  out.results[0].raw = nlohmann::json{{"k", 1}};
  out.results[0].rows.push_back({std::nullopt, std::nullopt, {std::monostate{}}});
  AudioStim audio = sine_audio(50.0, 1000, 0.01);
  audio.meta.onset = 2.0;
  out.stims.push_back(audio);
  EXPECT_EQ(decode_output(encode_output(out)), out);
  try {
    decode_output("not cbor at all");
    FAIL() << "expected CacheCorruption";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCacheCorruption);
  }
}
