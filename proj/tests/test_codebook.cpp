#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qgsm/codebook.hpp"
#include "qgsm/rng.hpp"

using namespace qgsm;

namespace {

// raw (unnormalized) gaussians for codeword `index`, the search's input
Vector raw_codeword(std::uint64_t seed, std::uint64_t index, std::uint32_t n) {
  Vector v(n);
  const std::uint64_t block = (static_cast<std::uint64_t>(n) + 1) / 2;
  rng::fill_gaussian(v, seed, index * block);
  return v;
}

}  // namespace

TEST_CASE("generator matches the published splitmix64 stream") {
  // reference outputs of splitmix64 seeded with 0 (state advances by the
  // golden-ratio increment, then the finalizer runs)
  CHECK(rng::word_at(0, 1) == 0xE220A8397B1DCDAFull);
  CHECK(rng::word_at(0, 2) == 0x6E789E6AA1B965F4ull);
  CHECK(rng::word_at(0, 3) == 0x06C45D188009454Full);
  CHECK(rng::word_at(0, 4) == 0xF88BB8A8724C81ECull);
  CHECK(rng::unit_double(rng::word_at(0, 1)) == doctest::Approx(0.8833108082136427).epsilon(1e-15));
  // uniforms never reach 0 (the log-safety guarantee); the extreme word
  // rounds up to exactly 1.0, which box-muller tolerates (log 1 = 0)
  CHECK(rng::unit_double(0) > 0.0);
  CHECK(rng::unit_double(~0ull) <= 1.0);
}

TEST_CASE("gaussian pairs follow the box-muller contract") {
  const std::uint64_t seed = 99;
  for (std::uint64_t k : {0ull, 1ull, 57ull}) {
    const double u0 = rng::unit_double(rng::word_at(seed, 2 * k));
    const double u1 = rng::unit_double(rng::word_at(seed, 2 * k + 1));
    const double r = std::sqrt(-2.0 * std::log(u0));
    const rng::GaussPair g = rng::gaussian_pair(seed, k);
    CHECK(g.z0 == doctest::Approx(r * std::cos(2.0 * std::numbers::pi * u1)).epsilon(1e-15));
    CHECK(g.z1 == doctest::Approx(r * std::sin(2.0 * std::numbers::pi * u1)).epsilon(1e-15));
  }
}

TEST_CASE("codeword count floors 2^(nB) exactly") {
  CHECK(codeword_count(10, Rational(1, 2)) == 32);
  CHECK(codeword_count(7, Rational(1, 3)) == 5);  // floor(2^(7/3)) = floor(5.0397)
  CHECK(codeword_count(3, Rational(1, 3)) == 2);
  CHECK(codeword_count(1000, Rational(0, 1)) == 1);
  CHECK(codeword_count(1, Rational(1, 2)) == 1);  // nB < 1 collapses to one word
  CHECK(codeword_count(62, Rational(1, 1)) == (1ull << 62));
  CHECK(codeword_count(124, Rational(1, 2)) == (1ull << 62));
  // reduced and unreduced rationals agree
  CHECK(codeword_count(10, Rational(2, 4)) == 32);
  CHECK_THROWS_AS(codeword_count(63, Rational(1, 1)), CapacityError);
  CHECK_THROWS_AS(codeword_count(125, Rational(1, 2)), CapacityError);
  CHECK_THROWS_AS(codeword_count(0, Rational(1, 1)), std::domain_error);
}

TEST_CASE("magnitude grid layout") {
  const MagnitudeGrid g = magnitude_grid(4, 2.0);
  CHECK(g.size == 4);
  CHECK(g.value(0) == 0.5);
  CHECK(g.value(1) == 1.0);
  CHECK(g.value(2) == 1.5);
  CHECK(g.value(3) == 2.0);

  CHECK(magnitude_grid(1, 0.5).size == 1);
  CHECK(magnitude_grid(1, 0.5).value(0) == 1.0);
  CHECK(magnitude_grid(100, 1.0).size == 10);

  // spacing 1/sqrt(n), top point at or above c2
  const MagnitudeGrid g7 = magnitude_grid(7, 2.3);
  const double step = 1.0 / std::sqrt(7.0);
  for (std::uint64_t k = 0; k + 1 < g7.size; ++k)
    CHECK(g7.value(k + 1) - g7.value(k) == doctest::Approx(step).epsilon(1e-14));
  CHECK(g7.value(g7.size - 1) >= 2.3 * (1.0 - 1e-15));
  CHECK_THROWS_AS(magnitude_grid(5, 0.0), std::domain_error);
  CHECK_THROWS_AS(magnitude_grid(5, -1.0), std::domain_error);
}

TEST_CASE("magnitude encoding picks the nearest point, lower on ties") {
  const MagnitudeGrid g = magnitude_grid(4, 2.0);  // {0.5, 1.0, 1.5, 2.0}
  CHECK(encode_magnitude(0.7, g) == 0);
  CHECK(encode_magnitude(0.8, g) == 1);
  CHECK(encode_magnitude(-0.3, g) == 0);
  CHECK(encode_magnitude(0.75, g) == 0);  // exact tie
  CHECK(encode_magnitude(1.25, g) == 1);  // exact tie
  CHECK(encode_magnitude(50.0, g) == 3);
  CHECK(encode_magnitude(2.0, g) == 3);
  CHECK_THROWS_AS(encode_magnitude(std::nan(""), g), std::domain_error);
  CHECK_THROWS_AS(encode_magnitude(std::numeric_limits<double>::infinity(), g),
                  std::domain_error);
}

TEST_CASE("magnitude decode round trip and quantization error") {
  const MagnitudeGrid g = magnitude_grid(4, 2.0);
  CHECK(decode_magnitude(0, g) == 0.5);
  CHECK(decode_magnitude(3, g) == 2.0);
  CHECK_THROWS_AS(decode_magnitude(4, g), std::invalid_argument);

  const MagnitudeGrid g7 = magnitude_grid(7, 2.3);
  for (std::uint64_t k = 0; k < g7.size; ++k)
    CHECK(encode_magnitude(g7.value(k), g7) == k);
  // in-range inputs land within half a step
  const double lo = g7.value(0), hi = g7.value(g7.size - 1);
  const double half_step = 0.5 / std::sqrt(7.0);
  for (int i = 0; i < 200; ++i) {
    const double v = lo + (hi - lo) * rng::unit_double(rng::word_at(404, i));
    const double back = decode_magnitude(encode_magnitude(v, g7), g7);
    CHECK(std::fabs(back - v) <= half_step * (1.0 + 1e-12));
  }
}

TEST_CASE("codewords are unit vectors, reproducible from (seed, index, n)") {
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t seed = rng::word_at(505, 3 * i);
    const std::uint64_t index = rng::word_at(505, 3 * i + 1) % 1024;
    const std::uint32_t n = 1 + rng::word_at(505, 3 * i + 2) % 40;
    const Vector v = codeword(seed, index, n);
    REQUIRE(v.size() == n);
    double nrm2 = 0.0;
    for (const double z : v) nrm2 += z * z;
    CHECK(std::fabs(std::sqrt(nrm2) - 1.0) <= 1e-12);
    CHECK(codeword(seed, index, n) == v);  // bitwise repeatable
  }
  CHECK(codeword(7, 0, 8) != codeword(7, 1, 8));
  CHECK(codeword(7, 0, 8) != codeword(8, 0, 8));
}

TEST_CASE("codeword coordinates match the sphere density moments") {
  const std::uint32_t n = 25;
  const std::uint32_t draws = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (std::uint32_t i = 0; i < draws; ++i) {
    const double v = codeword(606, i, n)[0];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / draws;
  const double mean2 = sum2 / draws;
  // sd(v) = 1/sqrt(n); sd(v^2) = sqrt(2(n-1)/(n^2(n+2)))
  CHECK(std::fabs(mean) <= 3.0 / std::sqrt(static_cast<double>(n) * draws));
  CHECK(std::fabs(mean2 - 0.04) <= 0.002);
}

TEST_CASE("search with one codeword returns it") {
  const Vector x = {0.3, -1.2, 0.4};
  const SearchResult r = search_direction(x, 11, 1, 1);
  CHECK(r.index == 0);
  const Vector c = codeword(11, 0, 3);
  double dot = 0.0;
  for (int i = 0; i < 3; ++i) dot += x[i] * c[i];
  CHECK(r.inner == doctest::Approx(dot).epsilon(1e-12));
}

TEST_CASE("search equals a materialized first-wins argmax") {
  for (int inst = 0; inst < 25; ++inst) {
    const std::uint64_t seed = rng::word_at(707, 2 * inst);
    const std::uint32_t n = 2 + rng::word_at(707, 2 * inst + 1) % 11;
    const std::uint64_t count = 64 + rng::word_at(708, inst) % 1024;
    Vector x(n);
    rng::fill_gaussian(x, rng::derive(709, inst), 0);

    std::uint64_t best_index = 0;
    double best_inner = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < count; ++i) {
      const Vector raw = raw_codeword(seed, i, n);
      double dot = 0.0, nrm2 = 0.0;
      for (std::uint32_t j = 0; j < n; ++j) {
        dot += x[j] * raw[j];
        nrm2 += raw[j] * raw[j];
      }
      const double inner = dot / std::sqrt(nrm2);
      if (inner > best_inner) {
        best_inner = inner;
        best_index = i;
      }
    }

    const SearchResult r = search_direction(x, seed, count, 3);
    CHECK(r.index == best_index);
    CHECK(r.inner == doctest::Approx(best_inner).epsilon(1e-12));
  }
}

TEST_CASE("search result is invariant to the worker count") {
  const std::uint32_t n = 8;
  Vector x(n);
  rng::fill_gaussian(x, 808, 0);
  const SearchResult serial = search_direction(x, 909, 1000, 1);
  for (unsigned w : {2u, 3u, 4u, 5u, 8u, 16u}) {
    const SearchResult r = search_direction(x, 909, 1000, w);
    CHECK(r.index == serial.index);
    CHECK(r.inner == serial.inner);  // bitwise: same scan expression
  }
}

TEST_CASE("exact affinity ties resolve to the lowest index on every worker count") {
  // n = 1 codewords take values +-1 up to the last ulp of the normalization,
  // so large clusters of bitwise-equal affinities are guaranteed
  const std::uint64_t seed = 1010;
  const std::uint64_t count = 512;
  const Vector x = {1.5};

  std::uint64_t best_index = 0;
  double best_inner = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < count; ++i) {
    const Vector raw = raw_codeword(seed, i, 1);
    const double inner = (x[0] * raw[0]) / std::sqrt(raw[0] * raw[0]);
    if (inner > best_inner) {
      best_inner = inner;
      best_index = i;
    }
  }

  for (unsigned w : {1u, 2u, 3u, 4u, 6u}) {
    const SearchResult r = search_direction(x, seed, count, w);
    CHECK(r.index == best_index);
    CHECK(r.inner == best_inner);
  }
}

TEST_CASE("search input validation") {
  const Vector x = {1.0, 2.0};
  CHECK_THROWS_AS(search_direction(Vector{}, 1, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(search_direction(x, 1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(search_direction(Vector{0.0, 0.0}, 1, 4, 1), std::domain_error);
  CHECK_THROWS_AS(search_direction(Vector{1.0, std::nan("")}, 1, 4, 1), std::domain_error);
  CHECK_THROWS_AS(search_direction(x, 1, (1ull << 62) + 1, 1), CapacityError);
}
