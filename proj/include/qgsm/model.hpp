#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgsm {

using Vector = std::vector<double>;

// A request would exceed a hard implementation limit (64-bit codeword
// indexing, desk-scale simulation guard, ...). The message names the limit.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed serialized input: bitstream or experiment spec.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nonnegative rate in bits per coordinate, kept as a reduced fraction so that
// n*B can be evaluated exactly in integer arithmetic.
struct Rational {
  std::uint32_t num = 0;
  std::uint32_t den = 1;

  Rational() = default;
  Rational(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) throw std::domain_error("rate denominator must be nonzero");
    const std::uint64_t g = std::gcd(numerator, denominator);
    const std::uint64_t rn = numerator / g;
    const std::uint64_t rd = denominator / g;
    if (rn > UINT32_MAX || rd > UINT32_MAX)
      throw std::domain_error("rate numerator/denominator out of 32-bit range");
    num = static_cast<std::uint32_t>(rn);
    den = static_cast<std::uint32_t>(rd);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

// Accepts "p/q" or a plain decimal such as "0.25". Decimals keep at most nine
// fractional digits so the fraction stays exact.
Rational parse_rational(const std::string& text);

// One problem instance: dimension, rate, noise level, ball radius squared.
struct ModelParams {
  std::uint32_t n = 1;
  Rational rate_b;
  double sigma2 = 1.0;
  double c2 = 1.0;

  void validate() const;  // throws std::domain_error
};

}  // namespace qgsm
