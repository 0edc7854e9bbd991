#pragma once
#include <cstdint>
#include <random>

namespace casper {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// collision-free stream split: every (trial, method, sweep point, purpose)
// combination gets its own generator seed
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = splitmix64(base ^ 0x517cc1b727220a95ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

}  // namespace casper
