#include "featflow/cache.hpp"

#include "featflow/digest.hpp"
#include "featflow/error.hpp"
#include "featflow/media_io.hpp"
#include "featflow/serialize.hpp"

namespace featflow {
namespace fs = std::filesystem;

namespace {

void hash_optional(Sha256& h, const std::optional<double>& v) {
  h.update_u64(v.has_value());
  if (v) h.update_f64(*v);
}

void hash_image(Sha256& h, const ImageStim& img) {
  h.update_u64(static_cast<std::uint64_t>(img.width));
  h.update_u64(static_cast<std::uint64_t>(img.height));
  h.update(std::span<const std::uint8_t>(img.pixels));
}

void hash_audio(Sha256& h, const AudioStim& a) {
  h.update_u64(static_cast<std::uint64_t>(a.sample_rate));
  h.update_u64(a.samples.size());
  for (double s : a.samples) h.update_f64(s);
}

void hash_stim(Sha256& h, const Stim& stim) {
  h.update_u64(static_cast<std::uint64_t>(stim.kind()));
  hash_optional(h, stim.meta().onset);
  hash_optional(h, stim.meta().duration);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TextStim>) {
          h.update_field(p.text);
        } else if constexpr (std::is_same_v<T, AudioStim>) {
          hash_audio(h, p);
        } else if constexpr (std::is_same_v<T, ImageStim>) {
          hash_image(h, p);
        } else if constexpr (std::is_same_v<T, VideoFrameStim>) {
          hash_image(h, p.image);
        } else if constexpr (std::is_same_v<T, VideoStim>) {
          h.update_f64(p.fps);
          h.update_u64(p.frame_count());
          for (std::size_t i = 0; i < p.frame_count(); ++i) hash_image(h, p.frames->decode(i));
          h.update_u64(p.audio_track != nullptr);
          if (p.audio_track) {
            hash_optional(h, p.audio_track->meta.onset);
            hash_audio(h, *p.audio_track);
          }
        } else if constexpr (std::is_same_v<T, ComplexTextStim>) {
          h.update_u64(p.elements.size());
          for (const auto& e : p.elements) hash_stim(h, Stim(e));
        } else if constexpr (std::is_same_v<T, CompoundStim>) {
          h.update_u64(p.slots.size());
          for (const auto& s : p.slots) hash_stim(h, s);
        }
      },
      stim.payload());
}

}  // namespace

std::string stim_digest(const Stim& stim) {
  Sha256 h;
  hash_stim(h, stim);
  return h.hex_digest();
}

std::string CacheKey::digest() const {
  Sha256 h;
  h.update_field(transformer_name);
  h.update_field(transformer_version);
  h.update_field(parameter_digest);
  h.update_field(stim_digest);
  return h.hex_digest();
}

TransformOutput Cache::get_or_compute(const CacheKey& key, const Producer& compute) {
  const std::string id = key.digest();
  std::shared_ptr<Slot> slot;
  {
    std::unique_lock<std::mutex> lock(mutex_);
    while (true) {
      auto it = slots_.find(id);
      if (it == slots_.end()) {
        slot = std::make_shared<Slot>();
        slots_.emplace(id, slot);
        break;
      }
      std::shared_ptr<Slot> existing = it->second;
      if (!existing->ready) {
        ready_cv_.wait(lock, [&] { return existing->ready || existing->abandoned; });
        continue;
      }
      if (sha256_hex(existing->bytes) == existing->sum) {
        std::string bytes = existing->bytes;
        lock.unlock();
        try {
          TransformOutput out = decode_output(bytes);
          hits_.fetch_add(1);
          return out;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kCacheCorruption) throw;
        }
        lock.lock();
      }
      // Integrity failure: evict and fall through to a fresh computation.
      corruptions_.fetch_add(1);
      auto again = slots_.find(id);
      if (again != slots_.end() && again->second == existing) slots_.erase(again);
    }
  }

  misses_.fetch_add(1);
  TransformOutput out;
  try {
    out = compute();
  } catch (...) {
    std::lock_guard<std::mutex> lock(mutex_);
    slot->abandoned = true;
    auto it = slots_.find(id);
    if (it != slots_.end() && it->second == slot) slots_.erase(it);
    ready_cv_.notify_all();
    throw;
  }
  std::string bytes = encode_output(out);
  std::string sum = sha256_hex(bytes);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    slot->bytes = std::move(bytes);
    slot->sum = std::move(sum);
    slot->ready = true;
  }
  ready_cv_.notify_all();
  return out;
}

bool Cache::contains(const CacheKey& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = slots_.find(key.digest());
  return it != slots_.end() && it->second->ready;
}

std::size_t Cache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t n = 0;
  for (const auto& [id, slot] : slots_) n += slot->ready;
  return n;
}

void Cache::persist(const fs::path& directory) const {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create cache directory " + directory.string());
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& [id, slot] : slots_) {
    if (!slot->ready) continue;
    write_file(directory / (id + ".entry"), slot->bytes);
    write_file(directory / (id + ".sum"), slot->sum + "\n");
  }
}

std::size_t Cache::load(const fs::path& directory, std::vector<std::string>* warnings) {
  if (!fs::is_directory(directory)) {
    throw Error(ErrorCode::kIoError, "cache directory " + directory.string() + " does not exist");
  }
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  std::vector<fs::path> entries;
  for (const auto& de : fs::directory_iterator(directory)) {
    if (de.path().extension() == ".entry") entries.push_back(de.path());
  }
  std::sort(entries.begin(), entries.end());
  std::size_t loaded = 0;
  for (const fs::path& entry : entries) {
    std::string id = entry.stem().string();
    fs::path sum_path = directory / (id + ".sum");
    if (!fs::exists(sum_path)) {
      warn("cache entry " + id + " has no checksum; skipped");
      continue;
    }
    std::string bytes = read_file(entry);
    std::string sum = read_file(sum_path);
    while (!sum.empty() && (sum.back() == '\n' || sum.back() == '\r')) sum.pop_back();
    if (sha256_hex(bytes) != sum) {
      corruptions_.fetch_add(1);
      warn("cache entry " + id + " fails its checksum; skipped");
      continue;
    }
    auto slot = std::make_shared<Slot>();
    slot->bytes = std::move(bytes);
    slot->sum = std::move(sum);
    slot->ready = true;
    std::lock_guard<std::mutex> lock(mutex_);
    slots_[id] = std::move(slot);
    ++loaded;
  }
  return loaded;
}

std::unique_ptr<Cache> load_cache(const fs::path& directory, std::vector<std::string>* warnings) {
  auto cache = std::make_unique<Cache>();
  cache->load(directory, warnings);
  return cache;
}

}  // namespace featflow
