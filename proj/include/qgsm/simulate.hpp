#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qgsm/estimator.hpp"
#include "qgsm/model.hpp"

// Monte Carlo harness: runs an (n, estimator) grid of replicated experiments,
// aggregates mean/sd of the per-replicate MSE, and renders CSV and SVG
// reports. Replicates are parallel; every per-replicate value is a pure
// function of (master_seed, n, replicate), and aggregation is pairwise over
// an indexed buffer, so results are identical for every worker count.

namespace qgsm {

enum class EstimatorKind { james_stein, linear_shrinkage, quantized, zero };

const char* estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);  // std::invalid_argument

struct ExperimentSpec {
  std::vector<std::uint32_t> n_values;
  Rational rate_b;
  double sigma2 = 1.0;
  double c2 = 1.0;
  std::optional<double> b2;  // defaults to c2
  std::uint32_t replicates = 0;
  std::uint64_t master_seed = 0;
  std::vector<EstimatorKind> estimators;

  double effective_b2() const { return b2 ? *b2 : c2; }
  void validate() const;  // std::invalid_argument / std::domain_error
};

// strict JSON form of ExperimentSpec: unknown or ill-typed fields are
// rejected by name; rate_b is a [num, den] pair
ExperimentSpec parse_spec(const std::string& json_text);

// cells with n*B above this are refused unless RunOptions::allow_large
inline constexpr std::uint32_t kDeskRateBits = 26;

struct RunOptions {
  unsigned workers = 0;  // 0 = hardware concurrency
  bool allow_large = false;
};

struct CellResult {
  std::uint32_t n = 0;
  EstimatorKind estimator = EstimatorKind::zero;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  std::uint32_t replicates = 0;
  double lower_bound = 0.0;
};

CellResult run_cell(const ExperimentSpec& spec, std::uint32_t n, EstimatorKind estimator,
                    const RunOptions& options = {});

struct CellFailure {
  std::uint32_t n = 0;
  EstimatorKind estimator = EstimatorKind::zero;
  std::string message;
};

struct GridResult {
  std::vector<CellResult> cells;
  std::vector<CellFailure> failures;
};

// runs every (n, estimator) cell in deterministic order (n ascending,
// estimator name ascending); a failing cell is recorded and the rest still run
GridResult run_grid(const ExperimentSpec& spec, const RunOptions& options = {});

// header: n,estimator,mean_mse,sd_mse,lower_bound,replicates
std::string emit_csv(std::span<const CellResult> cells);

// self-contained SVG, one chart per estimator: mean +- sd against n with a
// dashed line at the theory lower bound
std::string emit_svg(std::span<const CellResult> cells);

// per-replicate error split for the quantized estimator at one setting
std::vector<LossDecomposition> run_decomposition(const ModelParams& params, double b2,
                                                 std::uint32_t replicates,
                                                 std::uint64_t master_seed,
                                                 const RunOptions& options = {});

LossDecomposition mean_decomposition(std::span<const LossDecomposition> rows);

}  // namespace qgsm
