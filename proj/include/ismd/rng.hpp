#pragma once

#include <cstdint>
#include <limits>

namespace ismd {

// Counter-based seeding: every (seed, stream, step, particle) tuple maps to an
// independent generator, so results do not depend on evaluation order.
enum class Stream : std::uint64_t {
  diffusion = 1,
  minibatch = 2,
  edge_noise = 3,
  init = 4,
  graph = 5,
  problem = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t seed, Stream stream, std::uint64_t a,
                                std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

// SplitMix64 as a UniformRandomBitGenerator; cheap to construct per key.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t state) : state_(state) {}
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b = 0)
      : state_(mix_key(seed, stream, a, b)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ismd
