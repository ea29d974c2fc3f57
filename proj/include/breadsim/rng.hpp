#pragma once

/**
 * Counter-derived random streams.
 *
 * Every stochastic component draws from an RngStream derived from
 * (master seed, purpose, a, b). Streams are independent of execution
 * order, so sampling can be reordered or parallelized without changing
 * any result. The generator is xoshiro256++ seeded through splitmix64;
 * uniform doubles take the usual 53-bit path instead of
 * std::uniform_real_distribution, which is not pinned down by the
 * standard.
 */

#include <cstdint>

namespace breadsim {

enum class StreamPurpose : std::uint64_t {
  ModelBuild = 1,
  Rollout = 2,
  Probe = 3,
  Eval = 4,
  Stitch = 5,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Mixes a master seed with up to three stream coordinates.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  std::uint64_t h = detail::splitmix64(s);
  s = h ^ (a + 0x9e3779b97f4a7c15ULL);
  h = detail::splitmix64(s);
  s = h ^ (b + 0xd1b54a32d192ed03ULL);
  h = detail::splitmix64(s);
  s = h ^ (c + 0x8cb92ba72f3d8dd7ULL);
  return detail::splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(purpose), b, c);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = detail::splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double next_double() { return (next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Lemire multiply-shift, bias-free enough
  /// for the tiny ranges used here (offset choices per state).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace breadsim
