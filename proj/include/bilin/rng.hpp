#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bilin {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed split scheme: every random stream is keyed by (seed, index, role).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::string_view role) noexcept;

inline Rng make_rng(std::uint64_t seed, std::uint64_t index, std::string_view role) {
  return Rng(derive_seed(seed, index, role));
}

// Uniform in [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int uniform_int(Rng& rng, int n) {
  return static_cast<int>(uniform01(rng) * n);
}

double standard_normal(Rng& rng);

}  // namespace bilin
