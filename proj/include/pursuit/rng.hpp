#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pursuit {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Seed for a named substream of `root`. Streams with different names are independent, so
/// adding a consumer never shifts the draws of another one.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline Rng make_stream(std::uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace pursuit
