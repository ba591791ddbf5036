#pragma once

#include <cstdint>
#include <random>

namespace ebitflow {

// Finalizer of the splitmix64 generator. Used to spread user seeds and to
// derive independent child seeds; see derive_seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for stream `index` of a parent seed. Every per-trial and
// per-restart generator in the library is seeded through this function, so
// results do not depend on scheduling or thread count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ index);
}

// Second-level derivation for tagged substreams inside one trial.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t tag) {
  return splitmix64(derive_seed(seed, index) + splitmix64(tag));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace ebitflow
