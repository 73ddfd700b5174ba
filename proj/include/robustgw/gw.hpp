#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustgw/mmspace.hpp"
#include "robustgw/ot.hpp"
#include "robustgw/penalty.hpp"
#include "robustgw/types.hpp"

namespace robustgw {

/// How the local cost sum_{i',j'} pen(CX_ii' - CY_jj') pi_i'j' is evaluated.
enum class ContractionKind {
  Auto,         ///< Factorized for squared p=2, SortedMasks for Huber, Naive otherwise.
  Naive,        ///< Direct O(m^2 n^2) sum.
  Factorized,   ///< Squared p=2 only: O(m^2 n + m n^2) matrix products.
  SortedMasks,  ///< Piecewise-polynomial penalties: per-row sorting and prefix sums, exact.
};

std::string to_string(ContractionKind kind);
ContractionKind contraction_kind_from_string(const std::string& name);

/// True when SortedMasks can evaluate this penalty exactly.
bool supports_sorted_masks(const RobustPenalty& penalty);

/// Local cost matrix C(pi)_ij for the given plan.
Matrix local_cost(const Matrix& cx, const Matrix& cy, const Matrix& plan, const RobustPenalty& penalty,
                  ContractionKind kind = ContractionKind::Auto, std::size_t threads = 1);

/// <C(pi), pi> with the naive contraction.
double distortion_cost(const Matrix& cx, const Matrix& cy, const Matrix& plan, const RobustPenalty& penalty);
/// Same, after checking that the plan marginals match the space weights within 1e-6.
double distortion_cost(const MmSpace& X, const MmSpace& Y, const CouplingMatrix& plan,
                       const RobustPenalty& penalty);

/// Huber distortion through the masked f1 + f2 - h1 h2 factorization; throws
/// std::logic_error if it disagrees with the naive contraction beyond 1e-9 (relative).
double huber_cost_decomposed(const MmSpace& X, const MmSpace& Y, const CouplingMatrix& plan, double tau);

enum class PlanInit { Product, Perturbed };

struct GwConfig {
  RobustPenalty penalty = RobustPenalty::squared(2.0);
  /// Entropic regularization. Unset: 0.05 * median |CX_ii' - CY_jj'| over sampled 4-tuples.
  std::optional<double> epsilon;
  int outer_iter = 50;
  SinkhornConfig inner{0.05, 200, 1e-9, SinkhornDomain::Stabilized, 10};
  PlanInit init = PlanInit::Product;
  /// Log-scale of the multiplicative noise used by PlanInit::Perturbed.
  double init_noise = 1.0;
  /// Extra runs from perturbed starts; the lowest final objective wins.
  int restarts = 0;
  std::uint64_t seed = 0;
  double objective_tol = 1e-8;
  ContractionKind contraction = ContractionKind::Auto;
  /// Threads for the contraction (the i loop). 1 keeps everything sequential.
  std::size_t threads = 1;

  void validate() const;
};

struct GwResult {
  std::string method;
  RobustPenalty penalty = RobustPenalty::squared(2.0);
  CouplingMatrix plan;
  /// <C(pi), pi>, entropy excluded.
  double value = 0.0;
  /// value^(1/r) with r the penalty's root exponent.
  double value_with_root = 0.0;
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
  double epsilon = 0.0;
};

/// Median-based default for epsilon (0.05 * median sampled distortion).
double default_epsilon(const Matrix& cx, const Matrix& cy, std::uint64_t seed);

/// Entropic mirror descent: pi <- Sinkhorn projection of exp(-C(pi)/eps) * pi.
GwResult egw_solve(const Matrix& cx, const Vector& mu, const Matrix& cy, const Vector& nu, const GwConfig& cfg);
GwResult egw_solve(const MmSpace& X, const MmSpace& Y, const GwConfig& cfg);

/// 1/2 * (distortion cost at the solved plan)^(1/r).
double gw_distance(const MmSpace& X, const MmSpace& Y, const GwConfig& cfg);
double report_distance(const RobustPenalty& penalty, double cost);

/// Pair cost tensor L[i][j][i'][j'] for quadratic objectives sum L pi_ij pi_i'j'.
struct PairCostTensor {
  std::size_t m = 0, n = 0;
  std::vector<double> data;
  double operator()(std::size_t i, std::size_t j, std::size_t i2, std::size_t j2) const {
    return data[((i * n + j) * m + i2) * n + j2];
  }
};
PairCostTensor pair_cost_tensor(const Matrix& cx, const Matrix& cy, const RobustPenalty& penalty);
double quadratic_value(const PairCostTensor& L, const Matrix& plan);

struct OracleResult {
  double value = 0.0;
  Matrix plan;
  /// Width of the final grid cell along each free coordinate.
  double resolution = 0.0;
  std::size_t evaluations = 0;
};

/// Grid search over the coupling polytope of (mu, nu) for m, n <= 3, followed by
/// successively finer grids around the incumbent.
OracleResult coupling_grid_oracle(const PairCostTensor& L, const Vector& mu, const Vector& nu, int grid_steps,
                                  int refine_levels = 6);
OracleResult gw_brute_oracle(const MmSpace& X, const MmSpace& Y, const RobustPenalty& penalty, int grid_steps,
                             int refine_levels = 6);

}  // namespace robustgw
