#pragma once

#include <cstdint>
#include <string_view>

namespace flowshap {

// All randomness in the project flows through this splitmix64 sequence so
// that every artifact is reproducible from a single 64-bit seed, across
// platforms. Component streams are derived with mix_seed rather than by
// sharing one stream, which makes tree construction order-independent.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Multiply-shift keeps the draw deterministic
  // and avoids the modulo hot path; bias is < n / 2^64.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Approximate standard normal via an Irwin-Hall sum of 12 uniforms.
  // Uses only IEEE additions, so the stream is bit-identical on every
  // platform; support is bounded to [-6, 6].
  double next_gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += next_unit();
    return s - 6.0;
  }

 private:
  std::uint64_t state_;
};

// splitmix64 finalizer, used as the mixing function for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derive a child seed from (seed, tag). Tags are either component_tag()
// hashes or small integers such as a tree index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (tag + 1));
}

// FNV-1a hash of a component name ("split", "cv", "rf", ...).
constexpr std::uint64_t component_tag(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace flowshap
