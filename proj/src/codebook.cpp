#include "qgsm/codebook.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "qgsm/rng.hpp"

namespace qgsm {

namespace {

// counters for codeword i start at i*ceil(n/2); a zero-norm raw vector (not
// reachable with 53-bit uniforms unless a coordinate rounds to exactly zero
// and n is tiny) advances the base by one block and retries
std::uint64_t block_size(std::uint32_t n) { return (static_cast<std::uint64_t>(n) + 1) / 2; }

void check_dim(std::uint32_t n) {
  if (n < 1) throw std::domain_error("codebook: dimension must be at least 1");
}

unsigned resolve_workers(unsigned workers, std::uint64_t count) {
  unsigned w = workers != 0 ? workers : std::thread::hardware_concurrency();
  if (w == 0) w = 1;
  if (static_cast<std::uint64_t>(w) > count) w = static_cast<unsigned>(count);
  return w;
}

struct Affinity {
  double dot;
  double nrm2;
};

// single pass over one codeword: accumulates <x, raw> and ||raw||^2 in
// coordinate order so the norm matches codeword() bit for bit
Affinity codeword_affinity(std::span<const double> x, std::uint64_t seed, std::uint64_t index) {
  const std::uint32_t n = static_cast<std::uint32_t>(x.size());
  const std::uint64_t block = block_size(n);
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t base = index * block + attempt * block;
    // words 2k, 2k+1 for counter k: advance the word key incrementally
    std::uint64_t key = seed + 2 * base * rng::kGolden;
    double dot = 0.0;
    double nrm2 = 0.0;
    std::uint32_t i = 0;
    while (i < n) {
      const double u0 = rng::unit_double(rng::mix64(key));
      key += rng::kGolden;
      const double u1 = rng::unit_double(rng::mix64(key));
      key += rng::kGolden;
      const double r = std::sqrt(-2.0 * std::log(u0));
      const double a = 2.0 * std::numbers::pi * u1;
      const double z0 = r * std::cos(a);
      dot += x[i] * z0;
      nrm2 += z0 * z0;
      ++i;
      if (i < n) {
        const double z1 = r * std::sin(a);
        dot += x[i] * z1;
        nrm2 += z1 * z1;
        ++i;
      }
    }
    if (nrm2 > 0.0) return {dot, nrm2};
  }
}

}  // namespace

double MagnitudeGrid::value(std::uint64_t index) const {
  return static_cast<double>(index + 1) / std::sqrt(static_cast<double>(n));
}

MagnitudeGrid magnitude_grid(std::uint32_t n, double c2) {
  check_dim(n);
  if (!std::isfinite(c2) || c2 <= 0.0)
    throw std::domain_error("magnitude_grid: c2 must be positive");
  const double points = std::ceil(c2 * std::sqrt(static_cast<double>(n)));
  if (points > 0x1p53)
    throw CapacityError("magnitude_grid: grid size exceeds 2^53 points");
  MagnitudeGrid g;
  g.n = n;
  g.size = points < 1.0 ? 1 : static_cast<std::uint64_t>(points);
  return g;
}

std::uint64_t encode_magnitude(double bhat2, const MagnitudeGrid& grid) {
  if (!std::isfinite(bhat2)) throw std::domain_error("encode_magnitude: input must be finite");
  const double pos = bhat2 * std::sqrt(static_cast<double>(grid.n)) - 1.0;
  std::uint64_t k0 = 0;
  if (pos >= static_cast<double>(grid.size - 1)) {
    k0 = grid.size - 1;
  } else if (pos > 0.0) {
    k0 = static_cast<std::uint64_t>(pos);
  }
  // float estimate, then exact nearest among the neighbors; strictly smaller
  // distance wins, so ties stay at the lower index
  const std::uint64_t lo = k0 > 0 ? k0 - 1 : 0;
  const std::uint64_t hi = k0 + 1 < grid.size ? k0 + 1 : grid.size - 1;
  std::uint64_t best = lo;
  double best_d = std::fabs(grid.value(lo) - bhat2);
  for (std::uint64_t k = lo + 1; k <= hi; ++k) {
    const double d = std::fabs(grid.value(k) - bhat2);
    if (d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

double decode_magnitude(std::uint64_t index, const MagnitudeGrid& grid) {
  if (index >= grid.size) throw std::invalid_argument("decode_magnitude: index out of range");
  return grid.value(index);
}

std::uint64_t codeword_count(std::uint32_t n, Rational rate_b) {
  check_dim(n);
  if (rate_b.den == 0) throw std::domain_error("codeword_count: rate denominator must be nonzero");
  const unsigned __int128 nb_num =
      static_cast<unsigned __int128>(n) * static_cast<unsigned __int128>(rate_b.num);
  const unsigned __int128 cap =
      static_cast<unsigned __int128>(kMaxRateBits) * static_cast<unsigned __int128>(rate_b.den);
  if (nb_num > cap)
    throw CapacityError("codeword_count: n*rate_b exceeds " + std::to_string(kMaxRateBits) +
                        " bits (64-bit index guard)");
  const std::uint64_t q = static_cast<std::uint64_t>(nb_num / rate_b.den);
  const std::uint64_t r = static_cast<std::uint64_t>(nb_num % rate_b.den);
  const std::uint64_t base = 1ull << q;
  if (r == 0) return base;
  const double frac = std::exp2(static_cast<double>(r) / static_cast<double>(rate_b.den));
  const std::uint64_t count =
      static_cast<std::uint64_t>(std::floor(static_cast<double>(base) * frac));
  return count < 1 ? 1 : count;
}

DirectionCodebook direction_codebook(std::uint64_t seed, std::uint32_t n, Rational rate_b) {
  return {seed, n, codeword_count(n, rate_b)};
}

std::vector<double> codeword(std::uint64_t seed, std::uint64_t index, std::uint32_t n) {
  check_dim(n);
  std::vector<double> v(n);
  const std::uint64_t block = block_size(n);
  for (std::uint64_t attempt = 0;; ++attempt) {
    rng::fill_gaussian(v, seed, index * block + attempt * block);
    double nrm2 = 0.0;
    for (const double z : v) nrm2 += z * z;
    if (nrm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(nrm2);
      for (double& z : v) z *= inv;
      return v;
    }
  }
}

SearchResult search_direction(std::span<const double> x, std::uint64_t seed,
                              std::uint64_t count, unsigned workers) {
  if (x.empty()) throw std::invalid_argument("search_direction: x must be nonempty");
  if (count < 1) throw std::invalid_argument("search_direction: count must be at least 1");
  if (count > (1ull << kMaxRateBits))
    throw CapacityError("search_direction: count exceeds 2^" + std::to_string(kMaxRateBits));
  double x_nrm2 = 0.0;
  for (const double v : x) {
    if (!std::isfinite(v)) throw std::domain_error("search_direction: x must be finite");
    x_nrm2 += v * v;
  }
  if (x_nrm2 == 0.0)
    throw std::domain_error("search_direction: direction undefined for the zero vector");

  const unsigned w = resolve_workers(workers, count);

  struct RangeBest {
    double inner = -std::numeric_limits<double>::infinity();
    std::uint64_t index = 0;
  };

  auto scan = [&](std::uint64_t lo, std::uint64_t hi, RangeBest& out) {
    RangeBest best;
    for (std::uint64_t i = lo; i < hi; ++i) {
      const Affinity a = codeword_affinity(x, seed, i);
      const double inner = a.dot / std::sqrt(a.nrm2);
      if (inner > best.inner) {
        best.inner = inner;
        best.index = i;
      }
    }
    out = best;
  };

  std::vector<RangeBest> results(w);
  if (w == 1) {
    scan(0, count, results[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned c = 0; c < w; ++c) {
      const std::uint64_t lo = static_cast<std::uint64_t>(
          static_cast<unsigned __int128>(count) * c / w);
      const std::uint64_t hi = static_cast<std::uint64_t>(
          static_cast<unsigned __int128>(count) * (c + 1) / w);
      pool.emplace_back(scan, lo, hi, std::ref(results[c]));
    }
    for (auto& t : pool) t.join();
  }

  // merge in range order: strict improvement keeps the earliest range, hence
  // the lowest index, on exact ties
  RangeBest best = results[0];
  for (unsigned c = 1; c < w; ++c) {
    if (results[c].inner > best.inner) best = results[c];
  }
  return {best.index, best.inner};
}

}  // namespace qgsm
