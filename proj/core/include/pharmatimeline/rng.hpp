#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace pharmatimeline {

// mt19937_64 with hand-rolled draw helpers. The standard pins down the raw
// engine output but not the distributions, so bounded draws and doubles are
// derived here to keep generated corpora byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  uint64_t bounded(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded(0)");
    uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::range: lo > hi");
    return lo + static_cast<int64_t>(bounded(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return (next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pharmatimeline
