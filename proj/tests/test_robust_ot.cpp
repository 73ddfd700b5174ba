#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/ot.hpp"

using namespace robustgw;

namespace {

struct Instance {
  Matrix a, b;
  Vector mu, nu;
};

Instance random_instance(std::mt19937_64& rng, int m, int n) {
  return {oracle::random_points(rng, m, 2), oracle::random_points(rng, n, 2), oracle::random_simplex(rng, m),
          oracle::random_simplex(rng, n)};
}

double truncated_w1(const Matrix& cross, const Vector& mu, const Vector& nu, double lambda) {
  return exact_ot(cross.cwiseMin(lambda), mu, nu).value;
}

}  // namespace

TEST(RobustOt, MatchesCappedLinearProgram) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const int m = 2 + rep % 3, n = 2 + (rep / 3) % 3;
    const auto in = random_instance(rng, m, n);
    const Matrix cost = oracle::euclidean(in.a, in.b).array().square();
    const double e1 = 0.05 * (rep % 6), e2 = 0.07 * (rep % 4);
    const auto r = robust_ot_from_cost(cost, in.mu, in.nu, e1, e2, 2.0);
    const auto lp = oracle::capped_ot_lp(cost, in.mu, in.nu, e1, e2);
    ASSERT_TRUE(lp.feasible);
    EXPECT_NEAR(r.cost, lp.value, 1e-10);
    EXPECT_NEAR(r.value, std::sqrt(r.cost), 1e-12);
    EXPECT_NEAR(r.coupling.mass(), 1.0, 1e-12);
    const Vector rows = r.coupling.plan.rowwise().sum(), cols = r.coupling.plan.colwise().sum().transpose();
    EXPECT_LE((rows - in.mu / (1 - e1)).maxCoeff(), 1e-12);
    EXPECT_LE((cols - in.nu / (1 - e2)).maxCoeff(), 1e-12);
  }
}

TEST(RobustOt, DualObjectiveEqualsPrimal) {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 30; ++rep) {
    const auto in = random_instance(rng, 5, 4);
    const Matrix cost = oracle::euclidean(in.a, in.b);
    const double e1 = 0.03 * rep / 3.0, e2 = 0.02 * (rep % 5);
    const auto r = robust_ot_from_cost(cost, in.mu, in.nu, e1, e2, 1.0);
    EXPECT_NEAR(r.dual.objective, r.cost, 1e-6);
    EXPECT_LE(r.dual.max_violation, 1e-9);
    EXPECT_GE(r.dual.u.minCoeff(), -1e-12);
    EXPECT_GE(r.dual.v.minCoeff(), -1e-12);
    // Recompute the dual objective and feasibility from the returned variables.
    const double obj = r.dual.t - r.dual.u.dot(in.mu / (1 - e1)) - r.dual.v.dot(in.nu / (1 - e2));
    EXPECT_NEAR(obj, r.cost, 1e-6);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_LE(r.dual.t - r.dual.u[i] - r.dual.v[j], cost(i, j) + 1e-9);
    // Potential form.
    EXPECT_NEAR(r.dual.potential_objective, r.cost, 1e-6);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_LE(r.dual.phi[i] + r.dual.psi[j], cost(i, j) + 1e-9);
    const double pot = in.mu.dot(r.dual.phi) / (1 - e1) + in.nu.dot(r.dual.psi) / (1 - e2) -
                       e1 / (1 - e1) * r.dual.phi.maxCoeff() - e2 / (1 - e2) * r.dual.psi.maxCoeff();
    EXPECT_NEAR(pot, r.cost, 1e-6);
  }
}

TEST(RobustOt, ZeroRadiusIsExactWasserstein) {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const auto in = random_instance(rng, 6, 5);
    const MmSpace X = build_space(in.a, in.mu), Y = build_space(in.b, in.nu);
    for (double p : {1.0, 2.0, 3.0}) {
      const Matrix cost = oracle::euclidean(in.a, in.b).array().pow(p);
      EXPECT_NEAR(robust_w_eps(X, Y, p, 0.0), wasserstein_from_cost(cost, in.mu, in.nu, p), 1e-8);
    }
  }
}

TEST(RobustOt, MonotoneAndContinuousInRadius) {
  std::mt19937_64 rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    const auto in = random_instance(rng, 6, 6);
    const MmSpace X = build_space(in.a, in.mu), Y = build_space(in.b, in.nu);
    double prev = robust_w_eps(X, Y, 2.0, 0.0);
    for (double e = 0.05; e < 0.9; e += 0.05) {
      const double v = robust_w_eps(X, Y, 2.0, e);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
    const double base = robust_w_eps(X, Y, 2.0, 0.3);
    double last_gap = std::numeric_limits<double>::infinity();
    for (double h : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
      const double gap = base - robust_w_eps(X, Y, 2.0, 0.3 + h);
      EXPECT_GE(gap, -1e-12);
      EXPECT_LE(gap, last_gap + 1e-12);
      last_gap = gap;
    }
    EXPECT_LE(last_gap, 1e-2);
  }
}

TEST(RobustOt, OutlierAtomIsUnloaded) {
  Matrix a(4, 1), b(4, 1);
  a << 0, 1, 2, 3;
  b << 0, 1, 2, 100;
  const MmSpace X = build_space(a), Y = build_space(b);
  // Inflated capacity 0.25/(1-eps) covers the mass dropped from the far atom once eps >= 0.25.
  EXPECT_GT(robust_w_eps(X, Y, 1.0, 0.1), 1.0);
  EXPECT_NEAR(robust_w_eps(X, Y, 1.0, 0.25, 0.25), 0.0, 1e-12);
  // Only the target side robust: the three close source atoms feed the clean targets.
  Matrix cost = oracle::euclidean(a, b);
  const Vector w = Vector::Constant(4, 0.25);
  const auto lp = oracle::capped_ot_lp(cost, w, w, 0.0, 0.25);
  EXPECT_NEAR(robust_w_eps(X, Y, 1.0, 0.0, 0.25), lp.value, 1e-12);
  EXPECT_LT(lp.value, 1.0);
}

TEST(RobustOt, RejectsRadiusOne) {
  Matrix a(2, 1);
  a << 0, 1;
  const MmSpace X = build_space(a);
  EXPECT_THROW(robust_w_eps(X, X, 1.0, 1.0), InvalidArgument);
}

TEST(LevyProkhorov, SandwichOnRandomInstances) {
  std::mt19937_64 rng(35);
  int violations = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const auto in = random_instance(rng, 5, 5);
    const MmSpace X = build_space(in.a, in.mu), Y = build_space(in.b, in.nu);
    const double lambda = 0.2 + 0.1 * (rep % 8);
    const double rho = levy_prokhorov_trunc(X, Y, lambda, 1e-9);
    const double w = truncated_w1(oracle::euclidean(in.a, in.b), in.mu, in.nu, lambda);
    violations += rho < w / (1 + lambda) - 1e-9;
    violations += rho > std::sqrt(w) + 1e-9;
  }
  EXPECT_EQ(violations, 0);
}

TEST(LevyProkhorov, SelfDistanceAndFarClouds) {
  std::mt19937_64 rng(36);
  const Matrix a = oracle::random_points(rng, 5, 2);
  const MmSpace X = build_space(a);
  EXPECT_NEAR(levy_prokhorov_trunc(X, X, 0.5), 0.0, 1e-4 * 0.5);
  Matrix b = a;
  b.col(0).array() += 50.0;
  const MmSpace Y = build_space(b);
  EXPECT_NEAR(levy_prokhorov_trunc(X, Y, 0.7), 0.7, 1e-4 * 0.7);
}

TEST(Robot, ExtremesOfTheThreshold) {
  std::mt19937_64 rng(37);
  const MmSpace X = build_space(oracle::random_points(rng, 5, 2)), Y = build_space(oracle::random_points(rng, 5, 2));
  EXPECT_EQ(robot_distance(X, Y, 0.0), 0.0);
  const Matrix cross = cross_distances(X, Y);
  EXPECT_NEAR(robot_distance(X, Y, cross.maxCoeff()), wasserstein_from_cost(cross, X.weights(), Y.weights(), 1.0),
              1e-12);
}
