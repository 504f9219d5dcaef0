#pragma once

#include <cstdint>
#include <string_view>

namespace reclab {

// Deterministic 64-bit generator (splitmix64). Report bytes and sampling
// orders are part of the artifact's reproducibility contract, so no
// std:: distributions anywhere: their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t bound = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= bound);
    return x % n;
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, the documented stable hash for experiment bucketing.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream-splitting helper: derives an independent seed from a base seed and
// a lane index (tree id, grid point, subject hash, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t lane) {
  Rng r(base ^ (0x9e3779b97f4a7c15ULL + lane * 0xbf58476d1ce4e5b9ULL));
  return r.next_u64();
}

}  // namespace reclab
