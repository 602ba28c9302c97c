#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qgsm/model.hpp"

// Two-part code support: an evenly spaced grid for the signal energy and a
// seed-addressed random codebook of uniform unit vectors for the direction.
// Codewords are never tabulated; they are regenerated on demand from
// (seed, index) so a search over 2^24 codewords needs O(n) memory.

namespace qgsm {

// grid points (k+1)/sqrt(n), k = 0..size-1, size = ceil(c2*sqrt(n))
struct MagnitudeGrid {
  std::uint32_t n = 1;
  std::uint64_t size = 1;

  double value(std::uint64_t index) const;
};

MagnitudeGrid magnitude_grid(std::uint32_t n, double c2);

// nearest grid point; exact ties and anything below the grid go to the lower
// index, anything above the grid clamps to the top
std::uint64_t encode_magnitude(double bhat2, const MagnitudeGrid& grid);

double decode_magnitude(std::uint64_t index, const MagnitudeGrid& grid);

// hard cap on n*B so codeword indices fit 64-bit arithmetic
inline constexpr std::uint32_t kMaxRateBits = 62;

// max(1, floor(2^(n*B))), evaluated from the exact rational n*B; integer
// exponents are computed exactly
std::uint64_t codeword_count(std::uint32_t n, Rational rate_b);

struct DirectionCodebook {
  std::uint64_t seed = 0;
  std::uint32_t n = 1;
  std::uint64_t count = 1;
};

DirectionCodebook direction_codebook(std::uint64_t seed, std::uint32_t n, Rational rate_b);

// unit vector for codeword `index`; deterministic in (seed, index, n)
std::vector<double> codeword(std::uint64_t seed, std::uint64_t index, std::uint32_t n);

struct SearchResult {
  std::uint64_t index = 0;
  double inner = 0.0;  // <x, codeword(index)>, codeword normalized
};

// argmax over codewords of the inner product with x. Ties resolve to the
// lowest index under exact float comparison, and the result is identical for
// every worker count and index partition: each range reports its
// (max, min-index) pair and ranges merge in index order.
// workers = 0 picks the hardware concurrency.
SearchResult search_direction(std::span<const double> x, std::uint64_t seed,
                              std::uint64_t count, unsigned workers = 0);

}  // namespace qgsm
