#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mfc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for an independent stream. Stream `k` of subsystem `name` is
/// mix64(mix64(master ^ fnv1a64(name)) + k), so registering a new subsystem
/// name never shifts the seeds handed to existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view subsystem,
                                    std::uint64_t stream = 0) {
  return mix64(mix64(master ^ fnv1a64(subsystem)) + stream);
}

inline Rng make_rng(std::uint64_t master, std::string_view subsystem, std::uint64_t stream = 0) {
  return Rng(derive_seed(master, subsystem, stream));
}

}  // namespace mfc
