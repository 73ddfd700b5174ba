#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "robustgw/errors.hpp"
#include "robustgw/gw.hpp"

namespace robustgw {

PairCostTensor pair_cost_tensor(const Matrix& cx, const Matrix& cy, const RobustPenalty& penalty) {
  PairCostTensor L;
  L.m = static_cast<std::size_t>(cx.rows());
  L.n = static_cast<std::size_t>(cy.rows());
  L.data.resize(L.m * L.n * L.m * L.n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < L.m; ++i)
    for (std::size_t j = 0; j < L.n; ++j)
      for (std::size_t i2 = 0; i2 < L.m; ++i2)
        for (std::size_t j2 = 0; j2 < L.n; ++j2) L.data[k++] = penalty(cx(i, i2) - cy(j, j2));
  return L;
}

double quadratic_value(const PairCostTensor& L, const Matrix& plan) {
  const std::size_t mn = L.m * L.n;
  const double* p = plan.data();
  double total = 0.0;
  for (std::size_t a = 0; a < mn; ++a) {
    if (p[a] == 0.0) continue;
    const double* row = L.data.data() + a * mn;
    double acc = 0.0;
    for (std::size_t b = 0; b < mn; ++b) acc += row[b] * p[b];
    total += p[a] * acc;
  }
  return total;
}

namespace {

// Free coordinates x_ij (i < m-1, j < n-1); the last row and column follow from the marginals.
bool complete_plan(const std::vector<double>& free, const Vector& mu, const Vector& nu, Matrix& plan) {
  const auto m = mu.size(), n = nu.size();
  constexpr double kSlack = 1e-13;
  std::size_t k = 0;
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    double used = 0.0;
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      plan(i, j) = free[k++];
      used += plan(i, j);
    }
    const double rest = mu[i] - used;
    if (rest < -kSlack) return false;
    plan(i, n - 1) = std::max(0.0, rest);
  }
  double last_used = 0.0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    double used = 0.0;
    for (Eigen::Index i = 0; i + 1 < m; ++i) used += plan(i, j);
    const double rest = nu[j] - used;
    if (rest < -kSlack) return false;
    plan(m - 1, j) = std::max(0.0, rest);
    last_used += plan(m - 1, j);
  }
  const double corner = mu[m - 1] - last_used;
  if (corner < -kSlack) return false;
  plan(m - 1, n - 1) = std::max(0.0, corner);
  return true;
}

}  // namespace

OracleResult coupling_grid_oracle(const PairCostTensor& L, const Vector& mu, const Vector& nu, int grid_steps,
                                  int refine_levels) {
  const auto m = static_cast<std::size_t>(mu.size()), n = static_cast<std::size_t>(nu.size());
  require(m >= 1 && n >= 1 && m <= 3 && n <= 3, "grid oracle supports at most 3x3 couplings");
  require(L.m == m && L.n == n, "pair cost tensor does not match the marginals");
  require(grid_steps >= 1 && grid_steps <= 64, "grid_steps must lie in [1, 64]");
  require(refine_levels >= 0, "refine_levels must be >= 0");
  require(std::fabs(mu.sum() - nu.sum()) <= 1e-9, "marginals must have equal mass");

  const std::size_t dims = (m - 1) * (n - 1);
  std::vector<double> lo(dims, 0.0), hi(dims);
  for (std::size_t i = 0, k = 0; i + 1 < m; ++i)
    for (std::size_t j = 0; j + 1 < n; ++j, ++k) hi[k] = std::min(mu[i], nu[j]);

  OracleResult best;
  best.value = std::numeric_limits<double>::infinity();
  Matrix plan(m, n);
  std::vector<double> point(dims);
  std::vector<double> center(dims, 0.0);
  double coarse = 0.0;
  for (std::size_t k = 0; k < dims; ++k) coarse = std::max(coarse, (hi[k] - lo[k]) / grid_steps);
  best.resolution = coarse;

  for (int level = 0; level <= refine_levels; ++level) {
    std::vector<int> idx(dims, 0);
    std::vector<double> step(dims);
    for (std::size_t k = 0; k < dims; ++k) step[k] = (hi[k] - lo[k]) / grid_steps;
    for (;;) {
      for (std::size_t k = 0; k < dims; ++k) point[k] = lo[k] + step[k] * idx[k];
      if (complete_plan(point, mu, nu, plan)) {
        ++best.evaluations;
        const double v = quadratic_value(L, plan);
        if (v < best.value) {
          best.value = v;
          best.plan = plan;
          center = point;
        }
      }
      std::size_t k = 0;
      while (k < dims && ++idx[k] > grid_steps) idx[k++] = 0;
      if (k == dims) break;
    }
    if (dims == 0) break;
    for (std::size_t k = 0; k < dims; ++k) {
      const double cap = std::min(mu[k / (n - 1)], nu[k % (n - 1)]);
      const double half = 2.0 * step[k];
      lo[k] = std::max(0.0, center[k] - half);
      hi[k] = std::min(cap, center[k] + half);
    }
  }
  if (!std::isfinite(best.value)) throw NumericalError("grid oracle found no feasible coupling");
  return best;
}

OracleResult gw_brute_oracle(const MmSpace& X, const MmSpace& Y, const RobustPenalty& penalty, int grid_steps,
                             int refine_levels) {
  require(X.size() <= 3 && Y.size() <= 3, "brute oracle supports spaces with at most 3 points");
  return coupling_grid_oracle(pair_cost_tensor(X.dist(), Y.dist(), penalty), X.weights(), Y.weights(), grid_steps,
                              refine_levels);
}

}  // namespace robustgw
