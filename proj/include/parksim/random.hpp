#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace parksim {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable across platforms, unlike std::hash.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent stream seed from a base seed and a task key, so that
/// per-task streams do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> key) {
  return Rng{derive_seed(base, key)};
}

/// Uniform double in [0, 1) from the top 53 bits; independent of libstdc++'s
/// distribution internals.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace parksim
