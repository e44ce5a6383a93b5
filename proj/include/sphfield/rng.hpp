#pragma once

#include <array>
#include <cstdint>

#include <boost/math/special_functions/erf.hpp>

namespace sphfield {

// Counter-based random numbers: every variate is a pure function of a key
// and a counter, so any subset of a stream can be regenerated in any order
// on any thread.
//
// Salmon, Moraes, Dror, Shaw, "Parallel random numbers: as easy as 1, 2, 3",
// SC 2011. Philox4x32 with 10 rounds.

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr PhiloxCounter philox_round(const PhiloxCounter& c, const PhiloxKey& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

constexpr PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    counter = detail::philox_round(counter, key);
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return counter;
}

/// Independent families of streams drawn from one master seed.
enum class StreamDomain : std::uint32_t {
  coefficients = 1,
  frames = 2,
  probes = 3,
  reference = 4,
  selftest = 5,
};

/// Philox key for (master_seed, domain). Domains are separated by hashing
/// rather than by counter bits so that each domain keeps the full counter.
constexpr PhiloxKey stream_key(std::uint64_t master_seed, StreamDomain domain) {
  const std::uint64_t k =
      detail::splitmix64(master_seed ^ detail::splitmix64(static_cast<std::uint64_t>(domain)));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// Address of one variate: (master_seed, replicate, l, m, j) for harmonic
/// coefficients; other domains reuse the four counter words as they see fit.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint32_t replicate = 0;
  std::int32_t ell = 0;
  std::int32_t m = 0;
  std::int32_t j = 0;
  StreamDomain domain = StreamDomain::coefficients;
};

/// Uniform variate in the open interval (0, 1) with 53 random bits.
constexpr double uniform_open(const StreamKey& key) {
  const PhiloxCounter ctr{key.replicate, static_cast<std::uint32_t>(key.ell),
                          static_cast<std::uint32_t>(key.m), static_cast<std::uint32_t>(key.j)};
  const auto out = philox4x32_10(ctr, stream_key(key.master_seed, key.domain));
  const std::uint64_t bits = ((static_cast<std::uint64_t>(out[0]) << 32) | out[1]) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate by inversion of the normal CDF.
inline double standard_normal(const StreamKey& key) {
  const double u = uniform_open(key);
  return -boost::math::constants::root_two<double>() * boost::math::erfc_inv(2.0 * u);
}

}  // namespace sphfield
