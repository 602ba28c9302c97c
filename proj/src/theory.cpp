#include "qgsm/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qgsm {

namespace {

void need(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

bool pos(double v) { return std::isfinite(v) && v > 0.0; }
bool nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// rates may be +inf (zero-distortion limit) but never negative or NaN
bool valid_rate(double b) { return b >= 0.0 && !std::isnan(b); }

}  // namespace

double pinsker_risk(double sigma2, double c2) {
  need(pos(sigma2), "pinsker_risk: sigma2 must be positive");
  need(pos(c2), "pinsker_risk: c2 must be positive");
  return sigma2 * c2 / (sigma2 + c2);
}

double quantized_risk_bound(double rate_b, double sigma2, double b2) {
  need(valid_rate(rate_b), "quantized_risk_bound: rate must be nonnegative");
  need(pos(sigma2), "quantized_risk_bound: sigma2 must be positive");
  need(nonneg(b2), "quantized_risk_bound: b2 must be nonnegative");
  const double denom = sigma2 + b2;
  return sigma2 * b2 / denom + b2 * b2 * std::exp2(-2.0 * rate_b) / denom;
}

double distortion_rate_gaussian(double rate_b, double sigma2) {
  need(valid_rate(rate_b), "distortion_rate_gaussian: rate must be nonnegative");
  need(pos(sigma2), "distortion_rate_gaussian: sigma2 must be positive");
  return sigma2 * std::exp2(-2.0 * rate_b);
}

double rate_lower_bound(double distortion, double sigma2, double c2) {
  need(pos(sigma2), "rate_lower_bound: sigma2 must be positive");
  need(pos(c2), "rate_lower_bound: c2 must be positive");
  need(std::isfinite(distortion), "rate_lower_bound: distortion must be finite");
  const double floor = pinsker_risk(sigma2, c2);
  if (distortion <= floor)
    throw std::domain_error("rate_lower_bound: distortion at or below the Pinsker floor");
  const double rate = 0.5 * std::log2(c2 * c2 / ((sigma2 + c2) * (distortion - floor)));
  return rate > 0.0 ? rate : 0.0;
}

double distortion(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("distortion: inputs must be nonempty and of equal length");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

double chi2_mean_tail_bound(std::uint64_t n, double t) {
  need(n >= 1, "chi2_mean_tail_bound: n must be at least 1");
  need(std::isfinite(t) && t > 0.0 && t < 1.0, "chi2_mean_tail_bound: t must lie in (0,1)");
  const double nd = static_cast<double>(n);
  return 2.0 * std::exp(-nd * t * t / 8.0);
}

double bhat_concentration_bound(std::uint64_t n, double t, double sigma2, double b2) {
  need(n >= 1, "bhat_concentration_bound: n must be at least 1");
  need(pos(t), "bhat_concentration_bound: t must be positive");
  need(pos(sigma2), "bhat_concentration_bound: sigma2 must be positive");
  need(nonneg(b2), "bhat_concentration_bound: b2 must be nonnegative");
  const double nd = static_cast<double>(n);
  const double first = 2.0 * std::exp(-nd * t * t / (32.0 * sigma2 * sigma2));
  if (b2 == 0.0) return first;
  const double sb = std::sqrt(sigma2 * b2);
  const double second = 8.0 * sb / std::sqrt(2.0 * std::numbers::pi * nd * t * t) *
                        std::exp(-nd * t * t / (32.0 * sigma2 * b2));
  return first + second;
}

double sphere_inner_density(double rho, std::uint32_t n) {
  need(n >= 2, "sphere_inner_density: n must be at least 2");
  if (!(std::fabs(rho) < 1.0)) return 0.0;
  // log-gamma difference keeps the normalizer finite for large n
  const double ln_c = -0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * n) -
                      std::lgamma(0.5 * (n - 1.0));
  return std::exp(ln_c + 0.5 * (n - 3.0) * std::log1p(-rho * rho));
}

double extreme_angle_limit(double rate_b) {
  need(valid_rate(rate_b), "extreme_angle_limit: rate must be nonnegative");
  return std::sqrt(1.0 - std::exp2(-2.0 * rate_b));
}

double orthogonality_tail(std::uint32_t n, double eps, double k_const) {
  need(n >= 2, "orthogonality_tail: n must be at least 2");
  need(std::isfinite(eps) && eps > 0.0 && eps < 1.0, "orthogonality_tail: eps must lie in (0,1)");
  need(pos(k_const), "orthogonality_tail: k_const must be positive");
  return k_const * std::sqrt(static_cast<double>(n)) *
         std::pow(1.0 - eps * eps, 0.5 * (n - 2.0));
}

double prior_tail_bound(std::uint64_t n, double delta) {
  need(n >= 1, "prior_tail_bound: n must be at least 1");
  need(std::isfinite(delta) && delta > 0.0 && delta < 1.0,
       "prior_tail_bound: delta must lie in (0,1)");
  const double nd = static_cast<double>(n);
  const double gap = 1.0 - delta * delta;
  const double d4 = delta * delta * delta * delta;
  return 2.0 * std::exp(-nd * gap * gap / (8.0 * d4));
}

}  // namespace qgsm
