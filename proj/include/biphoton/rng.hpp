#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

namespace biphoton {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for one artifact, keyed by the run seed, a tag naming
// the artifact, and an optional numeric parameter (e.g. the delay T). The
// result does not depend on the order in which artifacts are produced.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::string_view tag,
                                     double param = 0.0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(tag));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(param));
  return std::mt19937_64(h);
}

}  // namespace biphoton
