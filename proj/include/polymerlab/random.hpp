#pragma once

#include <cstdint>

namespace polymerlab {

// SplitMix64 finaliser (Steele, Lea & Flood, 2014). A bijection on 64-bit
// words with full avalanche; used for every counter-based draw in the library.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_pair(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(a) ^ (b * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

constexpr std::uint64_t mix_triple(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  return mix_pair(mix_pair(a, b), c);
}

/// Top 53 bits of a word mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stream domains keep disorder, replica seeds and auxiliary deviates apart.
enum class StreamTag : std::uint64_t {
  Disorder = 0x6469736f72646572ULL,
  Replica = 0x7265706c69636121ULL,
  Ray = 0x7261792d73747265ULL,
  Walk = 0x77616c6b2d737472ULL,
  Spine = 0x7370696e652d7374ULL,
};

/// Seed of item `index` in the stream `tag` under the run salt.
constexpr std::uint64_t derive_seed(std::uint64_t salt, StreamTag tag, std::uint64_t index) noexcept {
  return mix_triple(salt, static_cast<std::uint64_t>(tag), index);
}

/// Counter-based source of uniform deviates: the k-th draw is a pure function
/// of (seed, k).
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) noexcept : seed_(mix64(seed)) {}

  double next() noexcept { return to_unit(mix_pair(seed_, counter_++)); }
  double operator()() noexcept { return next(); }
  std::uint64_t drawn() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace polymerlab
