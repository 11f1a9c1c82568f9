#include "bilin/rng.hpp"

#include <cmath>
#include <numbers>

namespace bilin {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::string_view role) noexcept {
  // FNV-1a over the role tag.
  std::uint64_t tag = 0xcbf29ce484222325ULL;
  for (char c : role) {
    tag ^= static_cast<unsigned char>(c);
    tag *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ tag);
}

double standard_normal(Rng& rng) {
  // Box-Muller; avoids implementation-defined std::normal_distribution output.
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bilin
