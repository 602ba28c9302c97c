#include "qgsm/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "qgsm/rng.hpp"
#include "qgsm/theory.hpp"

namespace qgsm {

namespace {

void need(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

void check_vector(std::span<const double> x, const char* who) {
  if (x.empty()) throw std::invalid_argument(std::string(who) + ": input must be nonempty");
  for (const double v : x)
    if (!std::isfinite(v)) throw std::domain_error(std::string(who) + ": input must be finite");
}

double norm2(std::span<const double> x) {
  double acc = 0.0;
  for (const double v : x) acc += v * v;
  return acc;
}

// unit vector from the sphere stream of `seed`; same block-retry rule as
// codewords
Vector unit_direction(std::uint32_t n, std::uint64_t seed) {
  Vector u(n);
  const std::uint64_t block = (static_cast<std::uint64_t>(n) + 1) / 2;
  for (std::uint64_t attempt = 0;; ++attempt) {
    rng::fill_gaussian(u, seed, attempt * block);
    const double nrm2 = norm2(u);
    if (nrm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(nrm2);
      for (double& v : u) v *= inv;
      return u;
    }
  }
}

}  // namespace

double estimate_b2(std::span<const double> x, double sigma2) {
  check_vector(x, "estimate_b2");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "estimate_b2: sigma2 must be positive");
  return norm2(x) / static_cast<double>(x.size()) - sigma2;
}

EncodeOutcome quantized_encode_detail(std::span<const double> x, const ModelParams& params,
                                      std::uint64_t seed, unsigned workers) {
  params.validate();
  if (x.size() != params.n)
    throw std::invalid_argument("quantized_encode: x length does not match params.n");
  check_vector(x, "quantized_encode");
  const MagnitudeGrid grid = magnitude_grid(params.n, params.c2);
  const std::uint64_t mag = encode_magnitude(estimate_b2(x, params.sigma2), grid);
  const std::uint64_t count = codeword_count(params.n, params.rate_b);
  const SearchResult dir = search_direction(x, seed, count, workers);
  return {{mag, dir.index, seed}, dir.inner};
}

QuantizedIndex quantized_encode(std::span<const double> x, const ModelParams& params,
                                std::uint64_t seed, unsigned workers) {
  return quantized_encode_detail(x, params, seed, workers).index;
}

Vector quantized_decode(const QuantizedIndex& index, const ModelParams& params) {
  params.validate();
  const MagnitudeGrid grid = magnitude_grid(params.n, params.c2);
  if (index.mag_index >= grid.size)
    throw std::invalid_argument("quantized_decode: magnitude index out of range");
  if (index.dir_index >= codeword_count(params.n, params.rate_b))
    throw std::invalid_argument("quantized_decode: direction index out of range");
  const double b2 = decode_magnitude(index.mag_index, grid);
  const double shrink = 1.0 - std::exp2(-2.0 * params.rate_b.value());
  const double energy = b2 * b2 * shrink / (b2 + params.sigma2);  // ||theta||^2/n
  const double scale = std::sqrt(static_cast<double>(params.n) * energy);
  Vector v = codeword(index.seed, index.dir_index, params.n);
  for (double& z : v) z *= scale;
  return v;
}

Vector james_stein(std::span<const double> x, double sigma2) {
  check_vector(x, "james_stein");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "james_stein: sigma2 must be positive");
  if (x.size() < 3) throw std::domain_error("james_stein: needs dimension at least 3");
  const double nrm2 = norm2(x);
  if (nrm2 == 0.0) throw std::domain_error("james_stein: undefined for the zero vector");
  const double factor = 1.0 - (static_cast<double>(x.size()) - 2.0) * sigma2 / nrm2;
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= factor;
  return out;
}

Vector linear_shrinkage(std::span<const double> x, double sigma2) {
  check_vector(x, "linear_shrinkage");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "linear_shrinkage: sigma2 must be positive");
  double bhat2 = norm2(x) / static_cast<double>(x.size()) - sigma2;
  if (bhat2 < 0.0) bhat2 = 0.0;
  const double gamma = bhat2 / (bhat2 + sigma2);
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= gamma;
  return out;
}

LossDecomposition loss_decomposition(std::span<const double> theta, std::span<const double> x,
                                     std::span<const double> theta_check, double sigma2) {
  if (theta.size() != x.size() || x.size() != theta_check.size() || theta.empty())
    throw std::invalid_argument("loss_decomposition: inputs must be nonempty and of equal length");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "loss_decomposition: sigma2 must be positive");
  const double n = static_cast<double>(theta.size());
  const double m = norm2(x) / n;
  // unclamped plug-in gamma; zero input shrinks to zero
  const double bhat2 = m - sigma2;
  const double gamma = m > 0.0 ? bhat2 / (bhat2 + sigma2) : 0.0;
  LossDecomposition d;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double q = theta_check[i] - gamma * x[i];
    const double s = gamma * x[i] - theta[i];
    d.a1 += q * q;
    d.a2 += s * s;
    d.a3 += 2.0 * q * s;
  }
  d.a1 /= n;
  d.a2 /= n;
  d.a3 /= n;
  d.total = distortion(theta, theta_check);
  return d;
}

Vector sample_mean_on_sphere(std::uint32_t n, double b2, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample_mean_on_sphere: n must be at least 1");
  need(std::isfinite(b2) && b2 >= 0.0, "sample_mean_on_sphere: b2 must be nonnegative");
  if (b2 == 0.0) return Vector(n, 0.0);
  Vector u = unit_direction(n, rng::derive(seed, rng::kDomainSphere));
  const double scale = std::sqrt(static_cast<double>(n) * b2);
  for (double& v : u) v *= scale;
  return u;
}

Vector sample_observation(std::span<const double> theta, double sigma2, std::uint64_t seed) {
  check_vector(theta, "sample_observation");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "sample_observation: sigma2 must be positive");
  const std::uint32_t n = static_cast<std::uint32_t>(theta.size());
  Vector z(n);
  rng::fill_gaussian(z, rng::derive(seed, rng::kDomainNoise), 0);
  const double sigma = std::sqrt(sigma2);
  Vector x(n);
  for (std::uint32_t i = 0; i < n; ++i) x[i] = theta[i] + sigma * z[i];
  return x;
}

TestdistDraw sample_testdist(std::uint32_t n, double d, double sigma2, double c2,
                             std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample_testdist: n must be at least 1");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "sample_testdist: sigma2 must be positive");
  need(std::isfinite(c2) && c2 > 0.0, "sample_testdist: c2 must be positive");
  const double floor = pinsker_risk(sigma2, c2);
  if (!(d > floor && d < c2))
    throw std::domain_error("sample_testdist: distortion must lie in (pinsker_risk, c2)");
  const double gamma = c2 / (sigma2 + c2);
  // variances chosen so E d(theta, theta_tilde) = gamma2*channel + pinsker = d
  const double sd_tilde = std::sqrt(c2 - d);
  const double sd_channel = std::sqrt(d - floor) / gamma;
  const double sd_post = std::sqrt(gamma * sigma2);

  TestdistDraw out;
  out.theta_tilde.resize(n);
  out.x.resize(n);
  out.theta.resize(n);
  Vector g(n);
  rng::fill_gaussian(g, rng::derive(seed, rng::kDomainLatent), 0);
  for (std::uint32_t i = 0; i < n; ++i) out.theta_tilde[i] = sd_tilde * g[i];
  rng::fill_gaussian(g, rng::derive(seed, rng::kDomainChannel), 0);
  for (std::uint32_t i = 0; i < n; ++i) out.x[i] = out.theta_tilde[i] / gamma + sd_channel * g[i];
  rng::fill_gaussian(g, rng::derive(seed, rng::kDomainPosterior), 0);
  for (std::uint32_t i = 0; i < n; ++i) out.theta[i] = gamma * out.x[i] + sd_post * g[i];
  return out;
}

}  // namespace qgsm
