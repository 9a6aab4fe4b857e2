#pragma once

#include <cmath>
#include <cstdint>

namespace covertseq {

// SplitMix64 finalizer (Vigna). Bijective 64-bit mix used for seeding.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ 1.0 (Blackman & Vigna).
//
// Stream split rule (fixed for reproducibility): stream k of master seed m is
// seeded by four SplitMix64 outputs drawn from the starting state
// m XOR (k * 0xD2B74407B1CE6E93), so distinct trial indices give
// well-separated generator states independent of execution order.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed ^ (stream_index * 0xD2B74407B1CE6E93ULL);
    for (auto& word : s_) {
      s += 0x9E3779B97F4A7C15ULL;
      word = splitmix64_mix(s);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform draw strictly inside (0, 1): (n >> 11) * 2^-53 + 2^-54.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Inverse-CDF exponential: -mean * ln(U), U ~ uniform(0,1).
  double next_exponential(double mean) { return -mean * std::log(next_unit()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace covertseq
