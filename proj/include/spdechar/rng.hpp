#pragma once
#include <cstdint>

namespace spdechar::rng {

/// splitmix64 finalizer; full-avalanche 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Keyed counter hash: every draw is a pure function of (seed, a, b, c),
/// so a stream can be regenerated at any index in any order.
constexpr std::uint64_t keyed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ull);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

/// Map 64 random bits to the open interval (0,1).
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, accurate to ~1e-16 over (0,1)).
double normal_inv_cdf(double p);

/// Standard normal draw keyed by (seed, a, b, c): inverse-CDF of the
/// counter-based uniform stream, no rejection.
inline double keyed_normal(std::uint64_t seed, std::uint64_t a,
                           std::uint64_t b, std::uint64_t c) {
  return normal_inv_cdf(to_unit(keyed(seed, a, b, c)));
}

}  // namespace spdechar::rng
