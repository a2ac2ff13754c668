#pragma once

#include <cstdint>

#include "protoobf/bytes.hpp"

namespace protoobf {

// Deterministic cross-platform generator (splitmix64):
//   state += 0x9e3779b97f4a7c15
//   z = state; z = (z ^ z>>30) * 0xbf58476d1ce4e5b9
//   z = (z ^ z>>27) * 0x94d049bb133111eb
//   return z ^ z>>31
// Identical seed yields an identical stream on every platform.
class Prng {
public:
  explicit Prng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased-enough for desk-scale use; n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  Bytes bytes(std::size_t width) {
    Bytes out(width);
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < width; ++i) {
      if (i % 8 == 0) w = next();
      out[i] = static_cast<std::uint8_t>(w & 0xff);
      w >>= 8;
    }
    return out;
  }

private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  Prng p(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return p.next();
}

// Per-message randomness is a pure function of (msg_seed, node id, occurrence),
// so any two engines draw identical values regardless of traversal bookkeeping.
inline Bytes keyed_bytes(std::uint64_t msg_seed, std::uint64_t node_uid,
                         std::uint64_t occurrence, std::size_t width) {
  Prng p(mix_seed(mix_seed(msg_seed, node_uid), occurrence));
  return p.bytes(width);
}

}  // namespace protoobf
