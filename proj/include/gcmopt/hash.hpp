#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gcmopt {

/// 64-bit FNV-1a; stable across platforms, used for cache keys and payload checksums.
class Fnv1a64 {
 public:
  void update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view text) {
    update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view text) {
  Fnv1a64 h;
  h.update(text);
  return h.digest();
}

std::string hex64(std::uint64_t value);

}  // namespace gcmopt
