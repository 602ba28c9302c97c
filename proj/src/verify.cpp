#include "qgsm/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>

#include "qgsm/codebook.hpp"
#include "qgsm/estimator.hpp"
#include "qgsm/rng.hpp"
#include "qgsm/theory.hpp"

namespace qgsm {

namespace {

constexpr std::uint64_t kVerifySeed = 0x76657269667921ull;

// per-suite seed bases, so reordering checks inside one suite cannot
// perturb another suite's stream
enum SuiteTag : std::uint64_t {
  kTagChi2 = 1,
  kTagBhat = 2,
  kTagSphere = 3,
  kTagAngle = 4,
  kTagOrth = 5,
  kTagPrior = 6,
  kTagTestdist = 7,
};

std::string label(const char* fmt, double a, double b = 0.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

void add_check(SuiteResult& suite, std::string name, double observed, double limit) {
  suite.checks.push_back({std::move(name), observed, limit, observed <= limit});
}

double freq_se(double phat, double reps) { return std::sqrt(phat * (1.0 - phat) / reps); }

// composite 4-point Gauss-Legendre; nodes are interior, so integrable
// endpoint behaviour (the n=2 inner-product density) never gets sampled
double gauss4(double a, double b, int panels, const std::function<double(double)>& f) {
  static const double node[2] = {0.3399810435848563, 0.8611363115940526};
  static const double weight[2] = {0.6521451548625461, 0.3478548451374538};
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int q = 0; q < 2; ++q) {
      const double off = 0.5 * h * node[q];
      acc += weight[q] * (f(mid - off) + f(mid + off));
    }
  }
  return acc * 0.5 * h;
}

// integrals of the inner-product density against rho^power, via rho = sin(phi)
double density_moment(std::uint32_t n, double rho_lo, double rho_hi, int power) {
  const auto integrand = [n, power](double phi) {
    const double rho = std::sin(phi);
    double v = sphere_inner_density(rho, n) * std::cos(phi);
    for (int k = 0; k < power; ++k) v *= rho;
    return v;
  };
  return gauss4(std::asin(rho_lo), std::asin(rho_hi), 512, integrand);
}

SuiteResult suite_chi2(unsigned) {
  SuiteResult suite{"chi2-tail", {}, false};
  const std::uint32_t kReps = 100000;
  for (const std::uint32_t n : {16u, 64u, 256u}) {
    const std::uint64_t seed = rng::derive(kVerifySeed, kTagChi2, n);
    const std::uint64_t block = (static_cast<std::uint64_t>(n) + 1) / 2;
    std::vector<double> dev(kReps);
    Vector z(n);
    for (std::uint32_t r = 0; r < kReps; ++r) {
      rng::fill_gaussian(z, seed, r * block);
      double s = 0.0;
      for (const double v : z) s += v * v;
      dev[r] = std::abs(s / n - 1.0);
    }
    for (const double t : {0.2, 0.4, 0.6}) {
      std::uint32_t hits = 0;
      for (const double d : dev) hits += d > t;
      const double phat = static_cast<double>(hits) / kReps;
      add_check(suite, label("n=%.0f t=%.1f", n, t), phat,
                chi2_mean_tail_bound(n, t) + 3.0 * freq_se(phat, kReps));
    }
  }
  return suite;
}

SuiteResult suite_bhat(unsigned) {
  SuiteResult suite{"bhat-concentration", {}, false};
  const std::uint32_t kReps = 100000;
  const double sigma2 = 1.0, b2 = 1.0;
  for (const std::uint32_t n : {16u, 64u, 256u}) {
    // the lemma conditions on a fixed mean vector; one theta per n
    const Vector theta = sample_mean_on_sphere(n, b2, rng::derive(kVerifySeed, kTagBhat, n));
    std::vector<double> dev(kReps);
    for (std::uint32_t r = 0; r < kReps; ++r) {
      const Vector x = sample_observation(theta, sigma2, rng::derive(kVerifySeed, kTagBhat, n, r));
      dev[r] = std::abs(estimate_b2(x, sigma2) - b2);
    }
    for (const double t : {0.5, 1.0}) {
      std::uint32_t hits = 0;
      for (const double d : dev) hits += d > t;
      const double phat = static_cast<double>(hits) / kReps;
      add_check(suite, label("n=%.0f t=%.1f", n, t), phat,
                bhat_concentration_bound(n, t, sigma2, b2) + 3.0 * freq_se(phat, kReps));
    }
  }
  return suite;
}

SuiteResult suite_sphere(unsigned) {
  SuiteResult suite{"sphere-density", {}, false};
  for (const std::uint32_t n : {2u, 3u, 5u, 10u, 50u}) {
    add_check(suite, label("n=%.0f normalization", n),
              std::abs(density_moment(n, -1.0, 1.0, 0) - 1.0), 1e-9);
    add_check(suite, label("n=%.0f second moment", n),
              std::abs(density_moment(n, -1.0, 1.0, 2) - 1.0 / n), 1e-6);
  }
  // codeword coordinates must realize the same second moment
  {
    const std::uint32_t n = 25, draws = 4000;
    const std::uint64_t seed = rng::derive(kVerifySeed, kTagSphere, n);
    std::vector<double> sq(draws);
    for (std::uint32_t i = 0; i < draws; ++i) {
      const double v = codeword(seed, i, n)[0];
      sq[i] = v * v;
    }
    double mean = 0.0;
    for (const double v : sq) mean += v;
    mean /= draws;
    double var = 0.0;
    for (const double v : sq) var += (v - mean) * (v - mean);
    var /= (draws - 1.0);
    add_check(suite, "n=25 codeword second moment", std::abs(mean - 1.0 / n),
              3.0 * std::sqrt(var / draws));
  }
  return suite;
}

SuiteResult suite_angle(unsigned workers) {
  SuiteResult suite{"extreme-angle", {}, false};
  struct Case {
    std::uint32_t n;
    Rational rate;
  };
  // desk-scale pairs: nB = 16 keeps each search at 65536 codewords
  for (const Case cs : {Case{32, Rational(1, 2)}, Case{16, Rational(1, 1)}}) {
    const std::uint64_t count = codeword_count(cs.n, cs.rate);
    const std::uint32_t kSeeds = 20;
    double acc = 0.0;
    for (std::uint32_t s = 0; s < kSeeds; ++s) {
      Vector x(cs.n);
      rng::fill_gaussian(x, rng::derive(kVerifySeed, kTagAngle, cs.n, s), 0);
      double nrm2 = 0.0;
      for (const double v : x) nrm2 += v * v;
      const SearchResult best =
          search_direction(x, rng::derive(kVerifySeed, kTagAngle, cs.n, s, 1), count, workers);
      acc += best.inner / std::sqrt(nrm2);
    }
    const double mean = acc / kSeeds;
    add_check(suite, label("n=%.0f B=%.1f", cs.n, cs.rate.value()),
              std::abs(mean - extreme_angle_limit(cs.rate.value())), 0.08);
  }
  return suite;
}

SuiteResult suite_orth(unsigned) {
  SuiteResult suite{"orthogonality", {}, false};
  const double k_const = std::sqrt(std::numbers::pi / 2.0);
  // the analytic bound must dominate the exact two-sided density tail
  for (const std::uint32_t n : {2u, 5u, 16u, 64u, 256u}) {
    for (const double eps : {0.2, 0.4, 0.6}) {
      const double exact = 2.0 * density_moment(n, eps, 1.0, 0);
      add_check(suite, label("n=%.0f eps=%.1f exact tail", n, eps), exact,
                orthogonality_tail(n, eps, k_const));
    }
  }
  // and empirical codeword pairs must respect it too
  const std::uint32_t kPairs = 20000;
  for (const std::uint32_t n : {16u, 64u}) {
    const std::uint64_t seed = rng::derive(kVerifySeed, kTagOrth, n);
    std::vector<double> inner(kPairs);
    for (std::uint32_t i = 0; i < kPairs; ++i) {
      const Vector u = codeword(seed, 2 * i, n);
      const Vector v = codeword(seed, 2 * i + 1, n);
      double dot = 0.0;
      for (std::uint32_t j = 0; j < n; ++j) dot += u[j] * v[j];
      inner[i] = std::abs(dot);
    }
    for (const double eps : {0.2, 0.4}) {
      std::uint32_t hits = 0;
      for (const double d : inner) hits += d > eps;
      const double phat = static_cast<double>(hits) / kPairs;
      add_check(suite, label("n=%.0f eps=%.1f empirical", n, eps), phat,
                orthogonality_tail(n, eps, k_const) + 3.0 * freq_se(phat, kPairs));
    }
  }
  return suite;
}

SuiteResult suite_prior(unsigned) {
  SuiteResult suite{"prior-tail", {}, false};
  const std::uint32_t kReps = 100000;
  const double c2 = 1.0;
  for (const std::uint32_t n : {16u, 64u, 256u}) {
    const std::uint64_t seed = rng::derive(kVerifySeed, kTagPrior, n);
    const std::uint64_t block = (static_cast<std::uint64_t>(n) + 1) / 2;
    std::vector<double> energy(kReps);  // ||z||^2/n with z standard normal
    Vector z(n);
    for (std::uint32_t r = 0; r < kReps; ++r) {
      rng::fill_gaussian(z, seed, r * block);
      double s = 0.0;
      for (const double v : z) s += v * v;
      energy[r] = s / n;
    }
    for (const double delta : {0.7, 0.8, 0.9}) {
      // theta_i ~ N(0, delta^2 c^2): mass outside the ball of radius c
      std::uint32_t hits = 0;
      for (const double e : energy) hits += delta * delta * c2 * e > c2;
      const double phat = static_cast<double>(hits) / kReps;
      add_check(suite, label("n=%.0f delta=%.1f", n, delta), phat,
                prior_tail_bound(n, delta) + 3.0 * freq_se(phat, kReps));
    }
  }
  return suite;
}

SuiteResult suite_testdist(unsigned) {
  SuiteResult suite{"testdist-moments", {}, false};
  const std::uint32_t n = 50, kDraws = 10000;
  const double sigma2 = 1.0, c2 = 4.0, d = 2.0;
  const double gamma = c2 / (sigma2 + c2);
  std::vector<double> d_tilde(kDraws), d_shrink(kDraws), var_theta(kDraws);
  Vector shrunk(n);
  for (std::uint32_t r = 0; r < kDraws; ++r) {
    const TestdistDraw draw =
        sample_testdist(n, d, sigma2, c2, rng::derive(kVerifySeed, kTagTestdist, r));
    for (std::uint32_t i = 0; i < n; ++i) shrunk[i] = gamma * draw.x[i];
    d_tilde[r] = distortion(draw.theta, draw.theta_tilde);
    d_shrink[r] = distortion(draw.theta, shrunk);
    double s = 0.0;
    for (const double v : draw.theta) s += v * v;
    var_theta[r] = s / n;
  }
  const auto moment_check = [&](const char* name, std::span<const double> vals, double target) {
    double mean = 0.0;
    for (const double v : vals) mean += v;
    mean /= vals.size();
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    var /= (vals.size() - 1.0);
    add_check(suite, name, std::abs(mean - target),
              3.0 * std::sqrt(var / static_cast<double>(vals.size())));
  };
  moment_check("E d(theta, theta_tilde) = D", d_tilde, d);
  moment_check("E d(theta, gamma x) = pinsker", d_shrink, pinsker_risk(sigma2, c2));
  moment_check("per-coordinate var(theta) = c2", var_theta, c2);
  return suite;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "chi2-tail",     "bhat-concentration", "sphere-density",   "extreme-angle",
      "orthogonality", "prior-tail",         "testdist-moments",
  };
  return names;
}

SuiteResult run_suite(const std::string& name, unsigned workers) {
  SuiteResult suite;
  if (name == "chi2-tail") suite = suite_chi2(workers);
  else if (name == "bhat-concentration") suite = suite_bhat(workers);
  else if (name == "sphere-density") suite = suite_sphere(workers);
  else if (name == "extreme-angle") suite = suite_angle(workers);
  else if (name == "orthogonality") suite = suite_orth(workers);
  else if (name == "prior-tail") suite = suite_prior(workers);
  else if (name == "testdist-moments") suite = suite_testdist(workers);
  else throw std::invalid_argument("unknown suite \"" + name + "\"");
  suite.pass = true;
  for (const CheckResult& c : suite.checks) suite.pass = suite.pass && c.pass;
  return suite;
}

std::vector<SuiteResult> run_suites(const std::string& name, unsigned workers) {
  std::vector<SuiteResult> out;
  if (name == "all") {
    for (const std::string& s : suite_names()) out.push_back(run_suite(s, workers));
  } else {
    out.push_back(run_suite(name, workers));
  }
  return out;
}

}  // namespace qgsm
