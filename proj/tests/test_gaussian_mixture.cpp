#include <cmath>
#include <cstdio>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/gaussian_mixture.hpp"

using namespace robustgw;

namespace {

GaussianComponent random_gaussian(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  GaussianComponent c;
  c.mean = Vector(d);
  for (int k = 0; k < d; ++k) c.mean[k] = 2 * g(rng);
  Matrix B(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) B(a, b) = g(rng);
  c.cov = B * B.transpose() + 0.1 * Matrix::Identity(d, d);
  return c;
}

/// tr (S0^1/2 S1 S0^1/2)^1/2 = sum of square roots of the (real, nonnegative) eigenvalues of S0 S1.
double w2_by_product_eigenvalues(const GaussianComponent& a, const GaussianComponent& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a.cov * b.cov);
  double cross = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) cross += std::sqrt(std::max(0.0, es.eigenvalues()[k].real()));
  const double sq = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2 * cross;
  return std::sqrt(std::max(0.0, sq));
}

GaussianMixture random_mixture(std::mt19937_64& rng, int k, int d) {
  GaussianMixture m;
  m.weights = oracle::random_simplex(rng, k);
  for (int s = 0; s < k; ++s) m.components.push_back(random_gaussian(rng, d));
  return m;
}

}  // namespace

TEST(W2Gaussian, ClosedFormCases) {
  GaussianComponent a{Vector::Zero(2), Matrix::Identity(2, 2)};
  EXPECT_NEAR(w2_gaussian(a, a), 0.0, 1e-12);
  GaussianComponent b{Vector::Unit(2, 0), Matrix::Identity(2, 2)};
  EXPECT_NEAR(w2_gaussian(a, b), 1.0, 1e-12);
  GaussianComponent c{Vector::Zero(2), 4 * Matrix::Identity(2, 2)};
  EXPECT_NEAR(w2_gaussian(c, a), std::sqrt(2.0), 1e-12);
}

TEST(W2Gaussian, OneDimensionalFormula) {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double m0 = u(rng), m1 = -u(rng), s0 = u(rng), s1 = u(rng);
    GaussianComponent a{Vector::Constant(1, m0), Matrix::Constant(1, 1, s0 * s0)};
    GaussianComponent b{Vector::Constant(1, m1), Matrix::Constant(1, 1, s1 * s1)};
    EXPECT_NEAR(w2_gaussian(a, b), std::hypot(m0 - m1, s0 - s1), 1e-12);
  }
}

TEST(W2Gaussian, AgreesWithEigenvalueRoute) {
  std::mt19937_64 rng(92);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + rep % 4;
    const auto a = random_gaussian(rng, d), b = random_gaussian(rng, d);
    EXPECT_NEAR(w2_gaussian(a, b), w2_by_product_eigenvalues(a, b), 1e-7);
  }
}

TEST(W2Gaussian, MetricOnRandomTriples) {
  std::mt19937_64 rng(93);
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = random_gaussian(rng, 3), b = random_gaussian(rng, 3), c = random_gaussian(rng, 3);
    EXPECT_NEAR(w2_gaussian(a, b), w2_gaussian(b, a), 1e-9);
    EXPECT_LE(w2_gaussian(a, c), w2_gaussian(a, b) + w2_gaussian(b, c) + 1e-8);
  }
}

TEST(W2Gaussian, RejectsBadInput) {
  GaussianComponent a{Vector::Zero(2), Matrix::Identity(2, 2)};
  GaussianComponent b{Vector::Zero(3), Matrix::Identity(3, 3)};
  EXPECT_THROW(w2_gaussian(a, b), InvalidArgument);
  GaussianComponent neg{Vector::Zero(2), Matrix::Identity(2, 2)};
  neg.cov(1, 1) = -1.0;
  EXPECT_THROW(neg.validate(), InvalidArgument);
  GaussianComponent asym{Vector::Zero(2), Matrix::Identity(2, 2)};
  asym.cov(0, 1) = 0.5;
  EXPECT_THROW(asym.validate(), InvalidArgument);
  Matrix tiny = Matrix::Identity(2, 2);
  tiny(1, 1) = -1e-12;
  EXPECT_NO_THROW((GaussianComponent{Vector::Zero(2), tiny}.validate()));
}

TEST(MixtureGw, SameMixtureUpToPermutation) {
  std::mt19937_64 rng(94);
  const auto a = random_mixture(rng, 4, 2);
  GaussianMixture b;
  const std::vector<int> perm{2, 0, 3, 1};
  b.weights = Vector(4);
  for (int s = 0; s < 4; ++s) {
    b.components.push_back(a.components[perm[s]]);
    b.weights[s] = a.weights[perm[s]];
  }
  GwConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.outer_iter = 200;
  cfg.restarts = 3;
  EXPECT_LE(mixture_gw(a, b, cfg).value, 1e-6);
}

TEST(MixtureGw, SingleComponentsGiveZero) {
  std::mt19937_64 rng(95);
  const auto a = random_mixture(rng, 1, 2), b = random_mixture(rng, 1, 3);
  GwConfig cfg;
  cfg.epsilon = 0.1;
  const auto r = mixture_gw(a, b, cfg);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.plan.plan(0, 0), 1.0);
}

TEST(MixtureGw, TwoComponentsMatchGridOracle) {
  std::mt19937_64 rng(96);
  for (int rep = 0; rep < 8; ++rep) {
    const auto a = random_mixture(rng, 2, 1), b = random_mixture(rng, 2, 1);
    const MmSpace X = space_from_distances(mixture_distance_matrix(a), a.weights);
    const MmSpace Y = space_from_distances(mixture_distance_matrix(b), b.weights);
    const double best = gw_brute_oracle(X, Y, RobustPenalty::squared(2), 64).value;
    GwConfig cfg;
    cfg.epsilon = 1e-3 * std::max(1.0, std::max(X.diameter(), Y.diameter()));
    cfg.outer_iter = 300;
    cfg.restarts = 3;
    const auto r = mixture_gw(a, b, cfg);
    EXPECT_LE(r.value, best * 1.05 + 1e-9);
    EXPECT_NEAR(r.value_with_root, std::sqrt(r.value), 1e-12);
  }
}

TEST(MixtureGw, RigidMotionLeavesDistancesUnchanged) {
  std::mt19937_64 rng(97);
  const auto a = random_mixture(rng, 5, 3);
  // Orthogonal factor from a QR decomposition of a random matrix.
  const Matrix Q = Eigen::HouseholderQR<Matrix>(oracle::random_points(rng, 3, 3)).householderQ();
  const Vector shift = oracle::random_points(rng, 1, 3).row(0).transpose();
  GaussianMixture moved = a;
  for (auto& c : moved.components) {
    c.mean = Q * c.mean + shift;
    c.cov = Q * c.cov * Q.transpose();
  }
  EXPECT_LE((mixture_distance_matrix(a) - mixture_distance_matrix(moved)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MixtureGw, WeightPermutationInvariance) {
  std::mt19937_64 rng(98);
  const auto a = random_mixture(rng, 3, 2), b = random_mixture(rng, 4, 2);
  GaussianMixture c = b;
  std::swap(c.components[0], c.components[3]);
  std::swap(c.weights[0], c.weights[3]);
  GwConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.outer_iter = 300;
  cfg.restarts = 4;
  EXPECT_NEAR(mixture_gw(a, b, cfg).value, mixture_gw(a, c, cfg).value, 1e-3 * (1 + mixture_gw(a, b, cfg).value));
}

TEST(MixtureGwRobust, ZeroRadiusTracksClosedForm) {
  std::mt19937_64 rng(99);
  const auto a = random_mixture(rng, 3, 2), b = random_mixture(rng, 3, 2);
  GwConfig cfg;
  cfg.epsilon = 0.05;
  RobustMixtureOptions opts;
  opts.samples = 100;
  const double exact = mixture_gw(a, b, cfg).value_with_root;
  std::vector<double> draws;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    opts.seed = seed;
    draws.push_back(mixture_gw_robust(a, b, 0.0, cfg, opts).value_with_root);
  }
  double mean = 0.0, spread = 0.0;
  for (double v : draws) mean += v / draws.size();
  for (double v : draws) spread = std::max(spread, std::fabs(v - mean));
  std::printf("closed form %.4f, sampled mean %.4f, spread %.4f\n", exact, mean, spread);
  EXPECT_LE(std::fabs(mean - exact), 0.25 * (1 + exact));
}

TEST(MixtureGwRobust, ContaminatedComponentIsDiscounted) {
  std::mt19937_64 rng(100);
  const auto a = random_mixture(rng, 3, 2);
  RobustMixtureOptions opts;
  opts.samples = 60;
  opts.seed = 3;
  auto atoms = sample_components(a, opts.samples, opts.seed);
  // Shift 10% of the first component's samples far away.
  Matrix pts = atoms[0].points();
  for (int k = 0; k < opts.samples / 10; ++k) pts.row(k).array() += 50.0;
  atoms[0] = build_space(pts);
  GwConfig cfg;
  cfg.epsilon = 0.05;
  const double plain = mixture_gw_robust_atoms(atoms, a.weights, a, 0.0, cfg, opts).value;
  const double robust = mixture_gw_robust_atoms(atoms, a.weights, a, 0.15, cfg, opts).value;
  EXPECT_LT(robust, plain);
}

TEST(MixtureGwRobust, SameMixtureIsSmall) {
  std::mt19937_64 rng(101);
  const auto a = random_mixture(rng, 3, 2);
  GwConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.outer_iter = 200;
  RobustMixtureOptions opts;
  opts.samples = 150;
  const auto r = mixture_gw_robust(a, a, 0.0, cfg, opts);
  // Only sampling error separates the two distance matrices.
  EXPECT_LE(r.value_with_root, 0.5);
  EXPECT_GE(r.plan.plan.diagonal().sum(), 0.99);
}
