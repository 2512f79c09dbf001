#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow {

// Content hash of the decoded payload plus kind and timing (onset,
// duration). Source path, history and sibling order are excluded.
std::string stim_digest(const Stim& stim);

struct CacheKey {
  std::string transformer_name;
  std::string transformer_version;
  std::string parameter_digest;
  std::string stim_digest;

  // Filename-safe hex digest of all four fields.
  std::string digest() const;

  bool operator==(const CacheKey&) const = default;
};

// Content-addressed memo of transformer outputs with single-flight
// semantics: concurrent first requests for a key run the producer once.
// Entries are held as encoded bytes plus a checksum; a hit that fails the
// checksum is evicted and recomputed. Producer errors are never stored.
class Cache {
 public:
  using Producer = std::function<TransformOutput()>;

  Cache() = default;
  Cache(const Cache&) = delete;
  Cache& operator=(const Cache&) = delete;

  TransformOutput get_or_compute(const CacheKey& key, const Producer& compute);

  bool contains(const CacheKey& key) const;
  std::size_t size() const;
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t corruptions() const { return corruptions_.load(); }

  // Writes <digest>.entry and <digest>.sum per entry. Requires exclusive
  // access.
  void persist(const std::filesystem::path& directory) const;

  // Adds every intact entry found in `directory`. Corrupt entries are
  // skipped and described in `warnings`. Returns the number loaded.
  std::size_t load(const std::filesystem::path& directory,
                   std::vector<std::string>* warnings = nullptr);

 private:
  struct Slot {
    bool ready = false;
    bool abandoned = false;
    std::string bytes;
    std::string sum;
  };

  mutable std::mutex mutex_;
  std::condition_variable ready_cv_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> corruptions_{0};

  friend struct CacheInspector;
};

std::unique_ptr<Cache> load_cache(const std::filesystem::path& directory,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace featflow
