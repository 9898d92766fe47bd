#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fsaloha {

/// Random stream used throughout the library. Every stochastic operation takes
/// one explicitly so that runs replay bit-for-bit from their seeds.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream purposes shared by all methods of a repetition.
inline constexpr std::string_view kActivityStream = "activity";
inline constexpr std::string_view kChannelStream = "channel";
inline constexpr std::string_view kProposalStream = "proposal";
inline constexpr std::string_view kInitStream = "init";
inline constexpr std::string_view kEnvironmentStream = "environment";

/// Seed of the stream identified by (master, repetition, purpose, restart).
/// `purpose` is a method label or one of the shared stream names above.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repetition, std::string_view purpose,
                                    std::uint64_t restart) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(repetition + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ fnv1a64(purpose));
  h = splitmix64(h ^ splitmix64(restart + 0x85157af5ULL));
  return h;
}

inline Rng seed_plan(std::uint64_t master, std::uint64_t repetition, std::string_view purpose,
                     std::uint64_t restart = 0) {
  return Rng(derive_seed(master, repetition, purpose, restart));
}

}  // namespace fsaloha
