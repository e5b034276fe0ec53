#pragma once

// Counter-based random streams. Every atom of a simulated tree owns a 64-bit
// key; the offspring in each unit shell are drawn from a stream seeded by
// (key, shell), so a given (seed, sample index) always produces the same tree
// regardless of thread layout or of which region of the tree is explored.

#include <cstdint>
#include <limits>
#include <string_view>

namespace brwlaw {

/// The SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines a parent key with a child index.
constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64(key ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_key(mix_key(key, a), b);
}

/// FNV-1a, used to turn stream labels into key material.
constexpr std::uint64_t label_hash(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Root key of sample `index` in the stream family `label` under `seed`.
constexpr std::uint64_t root_key(std::uint64_t seed, std::string_view label,
                                 std::uint64_t index) noexcept {
  return mix_key(mix_key(splitmix64(seed), label_hash(label)), index);
}

/// SplitMix64 as a UniformRandomBitGenerator, so it plugs into <random>.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform draw on the open interval (0, 1) with 53 random bits.
template <typename Engine>
double open_uniform(Engine& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace brwlaw
