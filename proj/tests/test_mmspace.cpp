#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robustgw/csv.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/mmspace.hpp"

using namespace robustgw;

TEST(MmSpace, ThreeFourFive) {
  Matrix p(2, 2);
  p << 0, 0, 3, 4;
  const MmSpace X = build_space(p);
  EXPECT_DOUBLE_EQ(X.dist()(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(X.dist()(1, 0), 5.0);
  EXPECT_DOUBLE_EQ(X.weights()[0], 0.5);
  EXPECT_DOUBLE_EQ(X.diameter(), 5.0);
  EXPECT_TRUE(X.has_points());
}

TEST(MmSpace, MetricsAgreeWithDirectFormulas) {
  std::mt19937_64 rng(4);
  const Matrix a = oracle::random_points(rng, 6, 3), b = oracle::random_points(rng, 5, 3);
  const Matrix e = pairwise_distances(a, b, MetricKind::Euclidean);
  const Matrix s = pairwise_distances(a, b, MetricKind::SquaredEuclidean);
  const Matrix ip = pairwise_distances(a, b, MetricKind::InnerProduct);
  const Matrix ref = oracle::euclidean(a, b);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) {
      EXPECT_NEAR(e(i, j), ref(i, j), 1e-12);
      EXPECT_NEAR(s(i, j), ref(i, j) * ref(i, j), 1e-12);
      EXPECT_NEAR(ip(i, j), a.row(i).dot(b.row(j)), 1e-12);
    }
}

TEST(MmSpace, EuclideanDistancesAreAMetric) {
  std::mt19937_64 rng(5);
  const MmSpace X = build_space(oracle::random_points(rng, 25, 2));
  const Matrix& d = X.dist();
  for (int i = 0; i < 25; ++i) {
    EXPECT_EQ(d(i, i), 0.0);
    for (int j = 0; j < 25; ++j) {
      EXPECT_EQ(d(i, j), d(j, i));
      for (int k = 0; k < 25; ++k) EXPECT_LE(d(i, j), d(i, k) + d(k, j) + 1e-9);
    }
  }
}

TEST(MmSpace, WeightValidation) {
  Matrix p(3, 1);
  p << 0, 1, 2;
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  EXPECT_NO_THROW(build_space(p, w));
  w << 0.2, 0.3, 0.6;
  EXPECT_THROW(build_space(p, w), InvalidArgument);
  w << -0.1, 0.6, 0.5;
  EXPECT_THROW(build_space(p, w), InvalidArgument);
  EXPECT_THROW(build_space(p, Vector::Constant(2, 0.5)), InvalidArgument);
  EXPECT_NEAR(uniform_weights(7).sum(), 1.0, 1e-15);
}

TEST(MmSpace, PrecomputedChecks) {
  Matrix d(3, 3);
  d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  EXPECT_NO_THROW(space_from_distances(d));
  EXPECT_THROW(space_from_distances(d, std::nullopt, true), InvalidArgument);
  Matrix asym = d;
  asym(0, 1) = 2;
  EXPECT_THROW(space_from_distances(asym), InvalidArgument);
  Matrix diag = d;
  diag(1, 1) = 0.5;
  EXPECT_THROW(space_from_distances(diag), InvalidArgument);
  EXPECT_THROW(space_from_distances(Matrix(2, 3)), InvalidArgument);
}

TEST(MmSpace, InnerProductNeedsNonnegativeCoordinates) {
  Matrix p(2, 2);
  p << 1, 2, -1, 0;
  EXPECT_THROW(build_space(p, std::nullopt, MetricKind::InnerProduct), InvalidArgument);
}

TEST(MmSpace, DistortionSamplesEnumerateAllPairs) {
  Matrix px(3, 1), py(3, 1);
  px << 0, 1, 3;
  py << 0, 2, 3;
  const MmSpace X = build_space(px), Y = build_space(py);
  std::vector<IndexPair> pairing{{0, 0}, {1, 1}, {2, 2}};
  const auto all = distortion_samples(X, Y, pairing);
  ASSERT_EQ(all.size(), 9u);
  std::vector<double> expect;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) expect.push_back(std::fabs(X.dist()(a, b) - Y.dist()(a, b)));
  std::sort(expect.begin(), expect.end());
  auto got = all;
  std::sort(got.begin(), got.end());
  for (int k = 0; k < 9; ++k) EXPECT_DOUBLE_EQ(got[k], expect[k]);

  const auto sub = distortion_samples(X, Y, pairing, 50, 3);
  EXPECT_EQ(sub.size(), 50u);
  EXPECT_EQ(sub, distortion_samples(X, Y, pairing, 50, 3));
}

TEST(MmSpace, ProductSamplesAreSeededDraws) {
  std::mt19937_64 rng(6);
  const MmSpace X = build_space(oracle::random_points(rng, 8, 2));
  const MmSpace Y = build_space(oracle::random_points(rng, 9, 2));
  const auto a = distortion_samples_product(X, Y, 1000, 11);
  EXPECT_EQ(a, distortion_samples_product(X, Y, 1000, 11));
  EXPECT_NE(a, distortion_samples_product(X, Y, 1000, 12));
  const double cap = std::max(X.diameter(), Y.diameter());
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, cap);
  }
}

TEST(Csv, RoundTripAndHeader) {
  Matrix m(2, 3);
  m << 1.5, -2, 3e-17, 4, 5, 0.1;
  std::stringstream s;
  write_matrix_csv(s, m);
  std::stringstream with_header;
  with_header << "x,y,z\n" << s.str();
  const Matrix back = parse_matrix_csv(with_header);
  ASSERT_EQ(back.rows(), 2);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ(back, m);
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(parse_matrix_csv(ragged), InvalidArgument);
}
