#pragma once

#include <cstdint>
#include <span>

// Closed-form risk, rate, and tail-bound formulas for estimating a mean
// vector constrained to the Euclidean ball (1/n)*||theta||^2 <= c2 from
// observations x = theta + N(0, sigma2) under a communication budget of B
// bits per coordinate. All rates are in bits (base-2 logs).

namespace qgsm {

// minimax risk over the ball with an unconstrained channel:
// sigma2*c2 / (sigma2 + c2)
double pinsker_risk(double sigma2, double c2);

// risk floor at rate B for signal energy b2:
// sigma2*b2/(sigma2+b2) + b2^2 * 2^(-2B) / (sigma2+b2)
double quantized_risk_bound(double rate_b, double sigma2, double b2);

// distortion-rate function of a white Gaussian source: sigma2 * 2^(-2B)
double distortion_rate_gaussian(double rate_b, double sigma2);

// inverse of quantized_risk_bound in the rate argument at b2 = c2; clamps to
// zero above the zero-rate risk and rejects distortions at or below the
// Pinsker floor
double rate_lower_bound(double distortion, double sigma2, double c2);

// mean squared distance (1/n)*sum (x_i - y_i)^2
double distortion(std::span<const double> x, std::span<const double> y);

// P(|chi2_n/n - 1| >= t) <= 2*exp(-n*t^2/8) for 0 < t < 1
double chi2_mean_tail_bound(std::uint64_t n, double t);

// tail bound for the energy estimate ||x||^2/n - sigma2 around b2:
// 2*exp(-n*t^2/(32*sigma2^2)) + (8*sigma*b/sqrt(2*pi*n*t^2))*exp(-n*t^2/(32*sigma2*b2));
// the second term vanishes at b2 = 0
double bhat_concentration_bound(std::uint64_t n, double t, double sigma2, double b2);

// density of the inner product between a uniform unit vector and any fixed
// unit vector: (1/sqrt(pi)) * Gamma(n/2)/Gamma((n-1)/2) * (1-rho^2)^((n-3)/2)
// on |rho| < 1, zero outside
double sphere_inner_density(double rho, std::uint32_t n);

// limit of the best codeword alignment at rate B: sqrt(1 - 2^(-2B))
double extreme_angle_limit(double rate_b);

// near-orthogonality tail for a uniform unit vector against a fixed unit
// vector: k_const * sqrt(n) * (1 - eps^2)^((n-2)/2)
double orthogonality_tail(std::uint32_t n, double eps, double k_const);

// Gaussian prior mass escaping the ball: 2*exp(-n*(1-delta^2)^2/(8*delta^4))
double prior_tail_bound(std::uint64_t n, double delta);

}  // namespace qgsm
