#pragma once

#include <span>
#include <vector>

#include "robustgw/gw.hpp"
#include "robustgw/mmspace.hpp"
#include "robustgw/ot.hpp"

namespace robustgw {

/// Copy of X with distances replaced by min{d, lambda}.
MmSpace truncate_space(const MmSpace& X, double lambda);

/// GW pipeline on truncated distance matrices; 1/2 * cost^(1/r) like gw_distance.
double lrgw_distance(const MmSpace& X, const MmSpace& Y, double lambda, const GwConfig& cfg);
GwResult lrgw_solve(const MmSpace& X, const MmSpace& Y, double lambda, const GwConfig& cfg);

struct LrigwOptions {
  int max_iter = 100;
  double tol = 1e-10;
  /// Entry-wise move tried at a stall; the run stops only when none of them lowers the objective.
  double probe_step = 1e-4;
  ExactOtOptions exact;
  /// Used once the plan has more than exact.max_entries entries.
  SinkhornConfig sinkhorn{0.01, 2000, 1e-9, SinkhornDomain::Stabilized, 10};
};

struct LrigwState {
  Matrix A;
  CouplingMatrix plan;
  /// 8 ||A||_F^2 + OT_{c_A}(mu, nu)
  double objective = 0.0;
  double lambda = 0.0;
  /// Box bound M/2 on every entry of A.
  double m_bound = 0.0;
};

struct LrigwResult {
  LrigwState state;
  double f1 = 0.0;
  double f2_bar = 0.0;
  double total = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
};

/// Componentwise truncation of nonnegative points at sqrt(lambda / d).
Matrix truncated_features(const Matrix& points, double lambda);

/// F1 = sum mu_i mu_i' l(<x_i,x_i'>)^2 + the same for nu.
double lrigw_f1(const MmSpace& X, const MmSpace& Y, double lambda);

/// 8 ||A||^2 + OT value under c_A(x, y) = -8 l(x)^T A l(y).
double lrigw_objective(const MmSpace& X, const MmSpace& Y, double lambda, const Matrix& A,
                       const LrigwOptions& opts = {});

/// Block-coordinate descent on the inner-product upper bound F1 + F2bar.
LrigwResult lrigw_bound(const MmSpace& X, const MmSpace& Y, double lambda, const LrigwOptions& opts = {});

/// -2 sum <l(x),l(x')> <l(y),l(y')> pi pi as a pair cost tensor (for the grid oracle).
PairCostTensor lrigw_f2_tensor(const MmSpace& X, const MmSpace& Y, double lambda);

struct PmmResult {
  GwResult gw;
  Matrix cx;
  Matrix cy;
  /// cost^(1/p)
  double value = 0.0;
};

/// Distance matrices between atoms: robust W^eps_p on the X side, exact W_p on the Y side.
Matrix pmm_robust_matrix(std::span<const MmSpace> atoms, double eps, double p, const ExactOtOptions& opts = {});
Matrix pmm_exact_matrix(std::span<const MmSpace> atoms, double p, const ExactOtOptions& opts = {});

/// GW between probability-measure spaces with |W^eps_p(x,x') - W_p(y,y')|^p distortion.
PmmResult lrgw_pmm(std::span<const MmSpace> atoms_x, const Vector& a, std::span<const MmSpace> atoms_y,
                   const Vector& b, double eps, double p, const GwConfig& cfg);

}  // namespace robustgw
