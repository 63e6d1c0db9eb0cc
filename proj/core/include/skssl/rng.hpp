#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace skssl {

// FNV-1a, used for config hashes and for deriving per-module seeds.
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Seed for an independent RNG stream, e.g. derive_seed(master, "rotation/cnn").
// Streams depend only on (master, tag), never on the order jobs run in.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return fnv1a_mix(fnv1a(tag), master);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view tag) {
  return Rng(derive_seed(master, tag));
}

}  // namespace skssl
