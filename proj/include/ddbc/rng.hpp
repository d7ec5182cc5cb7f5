#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace ddbc {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, used to turn purpose tags into stream keys.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based random stream.
///
/// Output k of a stream is mix64(key + k * golden), so a stream is fully
/// determined by its key and position. Streams are derived from a root seed
/// with `split`, which lets callers give every sample index its own stream:
/// drawing more samples never changes the draws of earlier ones.
///
/// Satisfies UniformRandomBitGenerator, so the standard distributions work.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() = default;
  explicit RandomStream(std::uint64_t key) : key_(mix64(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  /// Child stream for a purpose tag and index; independent of this stream's position.
  [[nodiscard]] RandomStream split(std::string_view purpose, std::uint64_t index = 0) const {
    return RandomStream(mix64(key_ ^ hash_tag(purpose)) ^ mix64(index + 0x632be59bd9b4e019ULL));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace ddbc
