#pragma once

#include <cstdint>
#include <initializer_list>

namespace lpgnet {

/// Stateless 64-bit mixer (splitmix64 finalizer). Used both as the seed
/// derivation primitive and for counter-based per-entry noise draws.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Named sub-stream purposes. Every random decision in the toolkit draws
/// from a stream derived as derive_seed(root, {purpose, index...}), so a
/// single root seed reproduces an entire run and toggling one consumer
/// never shifts another's draws.
namespace stream {
constexpr uint64_t kWeightInit = 1;
constexpr uint64_t kDropout = 2;
constexpr uint64_t kDegreeNoise = 3;
constexpr uint64_t kEdgeCountNoise = 4;
constexpr uint64_t kAdjacencyNoise = 5;
constexpr uint64_t kPairSampling = 6;
constexpr uint64_t kGenerator = 7;
constexpr uint64_t kTrainCell = 8;
constexpr uint64_t kAttackCell = 9;
constexpr uint64_t kLpgnetLayer = 10;
constexpr uint64_t kGridSearch = 11;
}  // namespace stream

/// Chain-mixes a path of identifiers into one child seed:
///   h = mix64(root); for each id: h = mix64(h ^ mix64(id))
constexpr uint64_t derive_seed(uint64_t root, std::initializer_list<uint64_t> path) {
  uint64_t h = mix64(root);
  for (uint64_t id : path) h = mix64(h ^ mix64(id));
  return h;
}

/// xoshiro256** with splitmix64 seeding. Small, fast, and fully owned so
/// that sampled values are identical across platforms and toolchains.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) {
    uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ull;
      uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in the open interval (0, 1); never returns an endpoint, so
  /// inverse-CDF transforms stay finite.
  double next_unit() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection (bound > 0).
  uint64_t next_below(uint64_t bound) {
    const uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

/// Uniform in (0,1) from a counter-based draw: entry `index` of the stream
/// keyed by `key`. Loop-order and thread-count independent by construction.
inline double unit_at(uint64_t key, uint64_t index) {
  const uint64_t bits = mix64(key ^ mix64(index));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace lpgnet
