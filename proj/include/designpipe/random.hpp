#pragma once

#include <cstdint>
#include <random>

namespace designpipe {

// All seeded choices go through std::mt19937_64, whose output sequence is
// fixed by the standard, plus the bounded draw below. std's distributions are
// implementation-defined and are deliberately not used.
using Rng = std::mt19937_64;

// Unbiased draw from [0, n) by rejection. n must be > 0.
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
  const uint64_t threshold = (0 - n) % n;
  uint64_t x = rng();
  while (x < threshold) x = rng();
  return x % n;
}

}  // namespace designpipe
