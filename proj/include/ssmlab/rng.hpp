#pragma once

#include <cstdint>
#include <random>

namespace ssmlab {

// All randomness in the library flows from one explicit seed through this
// generator. The engine is std::mt19937_64, whose output sequence is fixed
// by the C++ standard, so runs are reproducible across platforms. Bounded
// draws use rejection sampling on the raw 64-bit output instead of
// std::uniform_int_distribution, whose mapping is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Uniform draw from [0, n). n must be positive.
  uint64_t below(uint64_t n) {
    const uint64_t limit = n * ((~uint64_t{0}) / n);
    uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Uniform draw from [lo, hi] inclusive.
  uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

  // Uniform p-bit value, p in [1, 64].
  uint64_t bits(int p) {
    const uint64_t v = eng_();
    return p >= 64 ? v : v & ((uint64_t{1} << p) - 1);
  }

 private:
  std::mt19937_64 eng_;
};

// splitmix64 step; used only to derive independent per-index seeds from a
// master seed so parallel sweeps stay deterministic under any thread count.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  uint64_t s = master ^ (0xd1b54a32d192ed03ull * (index + 1));
  return splitmix64(s);
}

}  // namespace ssmlab
