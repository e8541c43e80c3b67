#pragma once

#include <cstdint>
#include <random>

namespace bdett {

// One step of the SplitMix64 counter generator. Used as the stream-splitting
// rule everywhere: substream k of root seed r is seeded with
// splitmix64(r ^ k), so disjoint keys give decorrelated streams and a stream
// is reproducible from (root, key) alone.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t root, std::uint64_t key) {
  return std::mt19937_64(splitmix64(root ^ key));
}

// Fixed key offsets so trial streams never collide with model-level streams.
inline constexpr std::uint64_t kConditionKeyBase = 0xC0000000'00000000ull;
inline constexpr std::uint64_t kWeightNoiseKey = 0xDE6'4ADEull;

}  // namespace bdett
