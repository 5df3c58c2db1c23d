#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "catspec/errors.hpp"

namespace catspec {

// xoshiro256++ seeded through splitmix64.  the standard library distributions
// are implementation defined, so every draw used by the toolkit is produced
// here to keep seeded runs bit-identical across platforms.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto& word : state_) word = splitmix64_next(st);
  }

  // independent substream for work item `index` of a run seeded with `seed`
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t st = seed;
    std::uint64_t mixed = splitmix64_next(st);
    st = mixed ^ (0x9e3779b97f4a7c15ull * (index + 1));
    return Rng(splitmix64_next(st));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal, Box-Muller pair with one value cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // binomial by direct Bernoulli summation; trial counts here are O(100)
  int binomial(int trials, double p) {
    if (trials < 0 || p < 0.0 || p > 1.0) throw ValidationError("binomial: need trials >= 0 and p in [0, 1]");
    int hits = 0;
    for (int i = 0; i < trials; ++i)
      if (uniform() < p) ++hits;
    return hits;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace catspec
