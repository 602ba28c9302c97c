#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qgsm {

// One empirical-vs-analytic comparison. pass iff observed <= limit.
// For tail suites observed is an empirical frequency and limit the analytic
// bound plus 3 Monte Carlo standard errors; for quadrature and moment suites
// observed is an absolute deviation and limit the tolerance.
struct CheckResult {
  std::string name;
  double observed = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct SuiteResult {
  std::string name;
  std::vector<CheckResult> checks;
  bool pass = false;  // conjunction over checks
};

// Fixed order: chi2-tail, bhat-concentration, sphere-density, extreme-angle,
// orthogonality, prior-tail, testdist-moments.
const std::vector<std::string>& suite_names();

// Runs one named suite; deterministic (all randomness internally seeded).
// Unknown name throws std::invalid_argument.
SuiteResult run_suite(const std::string& name, unsigned workers = 0);

// name == "all" runs every suite in order, otherwise the one named suite.
std::vector<SuiteResult> run_suites(const std::string& name, unsigned workers = 0);

}  // namespace qgsm
