#include "qgsm/model.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qgsm {

namespace {

std::uint64_t parse_digits(const std::string& s, const char* what) {
  if (s.empty() || s.size() > 18) throw std::invalid_argument(std::string("rate: bad ") + what);
  std::uint64_t v = 0;
  for (const char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument(std::string("rate: bad ") + what);
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const std::uint64_t num = parse_digits(text.substr(0, slash), "numerator");
    const std::uint64_t den = parse_digits(text.substr(slash + 1), "denominator");
    if (den == 0) throw std::invalid_argument("rate: denominator must be nonzero");
    return Rational(num, den);
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(parse_digits(text, "integer"), 1);
  const std::string whole = text.substr(0, dot);
  const std::string frac = text.substr(dot + 1);
  if (whole.size() > 9) throw std::invalid_argument("rate: integer part too large");
  if (frac.size() > 9) throw std::invalid_argument("rate: more than nine fractional digits");
  std::uint64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::uint64_t num =
      parse_digits(whole.empty() ? "0" : whole, "integer part") * den + parse_digits(frac, "fraction");
  return Rational(num, den);
}

void ModelParams::validate() const {
  if (n < 1) throw std::domain_error("params: n must be at least 1");
  if (rate_b.den == 0) throw std::domain_error("params: rate denominator must be nonzero");
  if (!std::isfinite(sigma2) || sigma2 <= 0.0)
    throw std::domain_error("params: sigma2 must be positive");
  if (!std::isfinite(c2) || c2 <= 0.0) throw std::domain_error("params: c2 must be positive");
}

}  // namespace qgsm
