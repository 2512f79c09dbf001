#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace featflow {

// Incremental SHA-256. Multi-byte integers and doubles are fed in
// little-endian order so digests are portable across hosts.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  Sha256& update_u64(std::uint64_t value);
  Sha256& update_f64(double value);
  // Length-prefixed, so ("ab","c") and ("a","bc") hash differently.
  Sha256& update_field(std::string_view text);

  std::string hex_digest();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace featflow
