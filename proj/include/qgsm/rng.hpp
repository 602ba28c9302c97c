#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

// Counter-based generator: every draw is a pure function of (seed, counter),
// so any index range can be generated independently on any worker and two
// builds agree bit-for-bit on the integer stream.

namespace qgsm::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// word idx of the stream keyed by seed
constexpr std::uint64_t word_at(std::uint64_t seed, std::uint64_t idx) {
  return mix64(seed + idx * kGolden);
}

// uniform with 53-bit resolution; never exactly 0 (so log(u) is finite), but
// the extreme word rounds up to exactly 1.0, which Box-Muller tolerates
constexpr double unit_double(std::uint64_t w) {
  return (static_cast<double>(w >> 11) + 0.5) * 0x1p-53;
}

struct GaussPair {
  double z0;
  double z1;
};

// Box-Muller pair at counter k; consumes words 2k and 2k+1
inline GaussPair gaussian_pair(std::uint64_t seed, std::uint64_t k) {
  const double u0 = unit_double(word_at(seed, 2 * k));
  const double u1 = unit_double(word_at(seed, 2 * k + 1));
  const double r = std::sqrt(-2.0 * std::log(u0));
  const double a = 2.0 * std::numbers::pi * u1;
  return {r * std::cos(a), r * std::sin(a)};
}

// standard normals from counters [base, base + ceil(n/2)); odd n drops the
// trailing half pair
inline void fill_gaussian(std::span<double> out, std::uint64_t seed, std::uint64_t base) {
  const std::size_t n = out.size();
  for (std::size_t j = 0; 2 * j < n; ++j) {
    const GaussPair g = gaussian_pair(seed, base + j);
    out[2 * j] = g.z0;
    if (2 * j + 1 < n) out[2 * j + 1] = g.z1;
  }
}

// Domain tags keep unrelated streams (signal, noise, codebook, ...) derived
// from one user seed statistically independent.
enum Domain : std::uint64_t {
  kDomainSphere = 0x01,
  kDomainNoise = 0x02,
  kDomainLatent = 0x03,
  kDomainChannel = 0x04,
  kDomainPosterior = 0x05,
  kDomainSimTheta = 0x06,
  kDomainSimNoise = 0x07,
  kDomainSimCodebook = 0x08,
};

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed + kGolden + v);
}

template <class... Rest>
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t v, Rest... rest) {
  return derive(derive(seed, v), static_cast<std::uint64_t>(rest)...);
}

}  // namespace qgsm::rng
