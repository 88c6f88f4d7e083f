#pragma once

#include <cstdint>
#include <limits>

namespace ddslit {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key of the substream for (seed, index). Two rounds of mixing so that
/// neighbouring seeds and neighbouring indices land far apart.
inline constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) {
  return splitmix64_mix(splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

/// SplitMix64 generator positioned at the start of the (seed, index) substream.
/// Satisfies UniformRandomBitGenerator; every draw for trajectory `index`
/// comes from here, so results do not depend on how work is split.
class Substream {
 public:
  using result_type = std::uint64_t;

  Substream(std::uint64_t seed, std::uint64_t index) : state_(substream_key(seed, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace ddslit
