#pragma once

#include <cstdint>
#include <random>

namespace dspt {

/// splitmix64 step; used to derive independent deterministic streams from one
/// master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derive a child seed for a (purpose, id) pair. Every source of randomness in
/// the library flows from one command-line seed through this function, so runs
/// are reproducible and independent of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t id = 0) {
  return splitmix64(splitmix64(master ^ (purpose * 0xA24BAED4963EE407ULL)) ^ (id * 0x9FB21C651E98DF25ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

namespace seed_purpose {
inline constexpr std::uint64_t coreset = 1;
inline constexpr std::uint64_t histogram_sample = 2;
inline constexpr std::uint64_t probe = 3;
inline constexpr std::uint64_t instance = 4;
inline constexpr std::uint64_t query = 5;
inline constexpr std::uint64_t net = 6;
}  // namespace seed_purpose

}  // namespace dspt
