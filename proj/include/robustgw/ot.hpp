#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "robustgw/mmspace.hpp"
#include "robustgw/types.hpp"

namespace robustgw {

struct CouplingMatrix {
  Matrix plan;
  Vector row_marginal;
  Vector col_marginal;

  /// ||plan 1 - row_marginal||_1 + ||plan^T 1 - col_marginal||_1
  double marginal_violation() const;
  double mass() const { return plan.sum(); }
};

enum class SinkhornDomain {
  Auto,        ///< Log when epsilon < 0.05 * median(cost - min cost), else Scaling.
  Scaling,     ///< Plain kernel scaling; throws if a kernel row or column underflows.
  Stabilized,  ///< Scaling with the potentials absorbed into the kernel when they grow.
  Log,         ///< Log-sum-exp updates throughout.
};

struct SinkhornConfig {
  double epsilon = 0.05;
  int max_iter = 1000;
  double tol = 1e-9;
  SinkhornDomain domain = SinkhornDomain::Auto;
  int check_every = 10;

  void validate() const;
};

/// pi_ij = exp(log_a_i + log_kernel_ij + log_b_j).
struct SinkhornScalings {
  Vector log_a;
  Vector log_b;
};

struct SinkhornResult {
  CouplingMatrix coupling;
  SinkhornScalings scalings;
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
  bool log_domain = false;
  /// Marginal violation at each convergence checkpoint.
  std::vector<double> violation_trace;
};

/// Entropic OT with kernel exp(-cost / epsilon).
SinkhornResult sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg,
                        const SinkhornScalings* warm_start = nullptr);

/// Same iterations on an arbitrary log-kernel (used by entropic GW, where the
/// kernel carries the previous plan). cfg.epsilon only matters for Auto.
SinkhornResult sinkhorn_log_kernel(const Matrix& log_kernel, const Vector& mu, const Vector& nu,
                                   const SinkhornConfig& cfg, const SinkhornScalings* warm_start = nullptr);

struct ExactOtOptions {
  /// Largest m*n the transportation simplex accepts.
  std::size_t max_entries = 10000;
  /// Consecutive degenerate pivots before switching from Dantzig to Bland's rule.
  int degenerate_streak = 32;
};

struct ExactOtResult {
  CouplingMatrix coupling;
  double value = 0.0;
  /// Dual potentials with u_0 = 0 and u_i + v_j = c_ij on the basis.
  Vector u;
  Vector v;
  int pivots = 0;
};

/// Transportation simplex. Returns an optimal vertex of the transport polytope.
ExactOtResult exact_ot(const Matrix& cost, const Vector& mu, const Vector& nu, const ExactOtOptions& opts = {});

/// Cross-distance matrix d(x_i, y_j) under the metric of X (both spaces need points).
Matrix cross_distances(const MmSpace& X, const MmSpace& Y);

/// (inf_pi sum T_p(d(x,y)) pi)^(1/p); exact simplex or Sinkhorn.
double tukey_wasserstein(const MmSpace& X, const MmSpace& Y, double p, double tau, bool exact = true,
                         const SinkhornConfig& sinkhorn_cfg = {});

/// OT value under min{d(x,y), 2 lambda}.
double robot_distance(const MmSpace& X, const MmSpace& Y, double lambda);

/// W_p(mu, nu) from a cost matrix of p-th powers: (OT value)^(1/p).
double wasserstein_from_cost(const Matrix& cost_p, const Vector& mu, const Vector& nu, double p,
                             const ExactOtOptions& opts = {});

struct RobustDual {
  /// Dual variables of the capped program: maximize t - <a', u> - <b', v>
  /// subject to u, v >= 0 and t - u_i - v_j <= c_ij, with a' = mu/(1-eps), b' = nu/(1-eps2).
  double t = 0.0;
  Vector u;
  Vector v;
  double objective = 0.0;
  double max_violation = 0.0;
  /// Same optimum in potential form: sup_{phi_i + psi_j <= c_ij}
  /// <mu,phi>/(1-eps) + <nu,psi>/(1-eps2) - eps/(1-eps) max phi - eps2/(1-eps2) max psi.
  Vector phi;
  Vector psi;
  double potential_objective = 0.0;
};

struct RobustOtResult {
  /// Optimal transport cost of the capped program (the p-th power of W^eps_p).
  double cost = 0.0;
  double value = 0.0;
  CouplingMatrix coupling;
  RobustDual dual;
};

/// Robust W_p over the eps-Huber balls: rows capped by mu/(1-eps), columns by
/// nu/(1-eps2), total mass one. Solved as a balanced problem with one slack row
/// and one slack column.
RobustOtResult robust_ot_from_cost(const Matrix& cost_p, const Vector& mu, const Vector& nu, double eps,
                                   std::optional<double> eps2 = std::nullopt, double p = 1.0,
                                   const ExactOtOptions& opts = {});

double robust_w_eps(const MmSpace& X, const MmSpace& Y, double p, double eps,
                    std::optional<double> eps2 = std::nullopt, const ExactOtOptions& opts = {});

/// Truncated Levy-Prokhorov distance by bisection on [0, lambda].
/// tol defaults to 1e-4 * lambda. Returns the feasible end of the final bracket.
double levy_prokhorov_trunc(const MmSpace& X, const MmSpace& Y, double lambda,
                            std::optional<double> tol = std::nullopt);
double levy_prokhorov_from_distances(const Matrix& cross, const Vector& mu, const Vector& nu, double lambda,
                                     std::optional<double> tol = std::nullopt);

}  // namespace robustgw
