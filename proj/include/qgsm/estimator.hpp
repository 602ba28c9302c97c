#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qgsm/codebook.hpp"
#include "qgsm/model.hpp"

// Estimators for the ball-constrained mean vector: the two-part quantized
// estimator (energy grid + direction codebook), the James-Stein estimator,
// and plain linear shrinkage, plus the samplers the simulation harness uses.

namespace qgsm {

// transmitted description of one observation vector
struct QuantizedIndex {
  std::uint64_t mag_index = 0;
  std::uint64_t dir_index = 0;
  std::uint64_t seed = 0;  // codebook seed; decoder regenerates the codeword
};

// split of the squared error against gamma*x, gamma = bhat2/(bhat2+sigma2):
//   a1 quantization, a2 shrinkage-vs-truth, a3 cross term
struct LossDecomposition {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double total = 0.0;
};

// plug-in signal energy ||x||^2/n - sigma2; may be negative
double estimate_b2(std::span<const double> x, double sigma2);

struct EncodeOutcome {
  QuantizedIndex index;
  double inner = 0.0;  // achieved <x, codeword>
};

EncodeOutcome quantized_encode_detail(std::span<const double> x, const ModelParams& params,
                                      std::uint64_t seed, unsigned workers = 0);

QuantizedIndex quantized_encode(std::span<const double> x, const ModelParams& params,
                                std::uint64_t seed, unsigned workers = 0);

// reconstruction with ||theta||^2/n = bcheck2^2 * (1 - 2^(-2B)) / (bcheck2 + sigma2);
// B enters through the exact rational in params
Vector quantized_decode(const QuantizedIndex& index, const ModelParams& params);

// (1 - (n-2)*sigma2/||x||^2) * x, n >= 3; deliberately unclamped
Vector james_stein(std::span<const double> x, double sigma2);

// gamma*x with gamma = max(0, ||x||^2/n - sigma2) / (... + sigma2), in [0,1)
Vector linear_shrinkage(std::span<const double> x, double sigma2);

LossDecomposition loss_decomposition(std::span<const double> theta, std::span<const double> x,
                                     std::span<const double> theta_check, double sigma2);

// uniform direction scaled so that ||theta||^2/n equals b2 up to rounding;
// b2 = 0 gives the zero vector
Vector sample_mean_on_sphere(std::uint32_t n, double b2, std::uint64_t seed);

Vector sample_observation(std::span<const double> theta, double sigma2, std::uint64_t seed);

struct TestdistDraw {
  Vector theta_tilde;
  Vector x;
  Vector theta;
};

// joint draw whose marginals match the ball-prior channel and whose moments
// satisfy E distortion(theta, theta_tilde) = d and
// E distortion(theta, gamma*x) = pinsker_risk(sigma2, c2), gamma = c2/(sigma2+c2);
// valid for pinsker_risk(sigma2, c2) < d < c2
TestdistDraw sample_testdist(std::uint32_t n, double d, double sigma2, double c2,
                             std::uint64_t seed);

}  // namespace qgsm
