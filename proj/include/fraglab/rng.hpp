#pragma once

// Seeding contract: every replica draws from its own engine, keyed by
// (master seed, stream id, replica index). Nothing is shared across replicas.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace fraglab {

using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// FNV-1a, used to turn a test name into a stream id.
constexpr std::uint64_t stream_id(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
  return detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ stream) + replica);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
  return Engine(substream_seed(seed, stream, replica));
}

/// Uniform on the open interval (0,1), 53 bits.
inline double uniform_open(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer on {lo,...,hi}.
inline std::uint32_t uniform_int(Engine& rng, std::uint32_t lo, std::uint32_t hi) {
  // Lemire's multiply-shift with rejection.
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  std::uint64_t x = rng() >> 32;
  std::uint64_t m = x * range;
  auto low = static_cast<std::uint32_t>(m);
  if (low < range) {
    const auto threshold = static_cast<std::uint32_t>((0x100000000ULL - range) % range);
    while (low < threshold) {
      x = rng() >> 32;
      m = x * range;
      low = static_cast<std::uint32_t>(m);
    }
  }
  return lo + static_cast<std::uint32_t>(m >> 32);
}

/// Unit-rate exponential.
inline double exponential(Engine& rng) { return -std::log(uniform_open(rng)); }

inline double standard_normal(Engine& rng) {
  std::normal_distribution<double> dist;
  return dist(rng);
}

}  // namespace fraglab
