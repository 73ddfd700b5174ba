#include "robustgw/mmspace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "robustgw/errors.hpp"

namespace robustgw {

std::string to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::Euclidean:
      return "euclidean";
    case MetricKind::SquaredEuclidean:
      return "sqeuclidean";
    case MetricKind::InnerProduct:
      return "inner";
    case MetricKind::Precomputed:
      return "precomputed";
  }
  return "unknown";
}

MetricKind metric_kind_from_string(const std::string& name) {
  if (name == "euclidean") return MetricKind::Euclidean;
  if (name == "sqeuclidean" || name == "squared") return MetricKind::SquaredEuclidean;
  if (name == "inner") return MetricKind::InnerProduct;
  if (name == "precomputed") return MetricKind::Precomputed;
  throw InvalidArgument("unknown metric: " + name);
}

MmSpace::MmSpace(Matrix dist, Vector weights, std::optional<Matrix> points, MetricKind metric)
    : dist_(std::move(dist)), points_(std::move(points)), metric_(metric) {
  const auto n = static_cast<std::size_t>(dist_.rows());
  require(n >= 1, "a space needs at least one point");
  require(dist_.cols() == dist_.rows(), "distance matrix must be square");
  require(dist_.allFinite(), "distance matrix has non-finite entries");
  weights_ = validate_weights(weights, n);
  if (points_) require(static_cast<std::size_t>(points_->rows()) == n, "points and distances disagree in size");
}

const Matrix& MmSpace::points() const {
  if (!points_) throw InvalidArgument("space has no ambient coordinates");
  return *points_;
}

MmSpace MmSpace::with_dist(Matrix dist) const { return MmSpace(std::move(dist), weights_); }

Vector uniform_weights(std::size_t n) {
  return Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

Vector validate_weights(const Vector& weights, std::size_t n) {
  require(static_cast<std::size_t>(weights.size()) == n, "weights have the wrong length");
  require(weights.allFinite(), "weights must be finite");
  require((weights.array() >= 0.0).all(), "weights must be nonnegative");
  const double total = weights.sum();
  require(std::fabs(total - 1.0) <= 1e-9, "weights must sum to 1");
  return weights / total;
}

Matrix pairwise_distances(const Matrix& a, const Matrix& b, MetricKind metric) {
  require(a.cols() == b.cols(), "point sets have different dimensions");
  require(a.allFinite() && b.allFinite(), "coordinates must be finite");
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      switch (metric) {
        case MetricKind::Euclidean:
          out(i, j) = (a.row(i) - b.row(j)).norm();
          break;
        case MetricKind::SquaredEuclidean:
          out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
          break;
        case MetricKind::InnerProduct:
          out(i, j) = a.row(i).dot(b.row(j));
          break;
        case MetricKind::Precomputed:
          throw InvalidArgument("precomputed metric has no formula");
      }
    }
  }
  return out;
}

MmSpace build_space(const Matrix& points, const std::optional<Vector>& weights, MetricKind metric) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(n >= 1, "a space needs at least one point");
  if (metric == MetricKind::InnerProduct) {
    require((points.array() >= 0.0).all(), "inner-product spaces need nonnegative coordinates");
  }
  Matrix dist = pairwise_distances(points, points, metric);
  if (metric != MetricKind::InnerProduct) dist.diagonal().setZero();
  return MmSpace(std::move(dist), weights ? *weights : uniform_weights(n), points, metric);
}

MmSpace space_from_distances(Matrix dist, const std::optional<Vector>& weights, bool check_triangle) {
  const auto n = static_cast<std::size_t>(dist.rows());
  require(n >= 1 && dist.cols() == dist.rows(), "distance matrix must be square and non-empty");
  require(dist.allFinite(), "distance matrix has non-finite entries");
  const double scale = std::max(1.0, dist.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < n; ++i) {
    require(std::fabs(dist(i, i)) <= 1e-12 * scale, "distance matrix must have a zero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      require(dist(i, j) >= 0.0, "distances must be nonnegative");
      require(std::fabs(dist(i, j) - dist(j, i)) <= 1e-12 * scale, "distance matrix must be symmetric");
    }
  }
  if (check_triangle) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          require(dist(i, j) <= dist(i, k) + dist(k, j) + 1e-9 * scale, "triangle inequality violated");
  }
  return MmSpace(std::move(dist), weights ? *weights : uniform_weights(n));
}

std::vector<double> distortion_samples(const MmSpace& X, const MmSpace& Y, std::span<const IndexPair> pairing,
                                       std::optional<std::size_t> sample_size, std::uint64_t seed) {
  require(!pairing.empty(), "pairing must not be empty");
  for (const auto& [i, j] : pairing) require(i < X.size() && j < Y.size(), "pairing index out of range");
  const auto value = [&](const IndexPair& a, const IndexPair& b) {
    return std::fabs(X.dist()(a.first, b.first) - Y.dist()(a.second, b.second));
  };
  std::vector<double> out;
  if (!sample_size) {
    out.reserve(pairing.size() * pairing.size());
    for (const auto& a : pairing)
      for (const auto& b : pairing) out.push_back(value(a, b));
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairing.size() - 1);
  out.reserve(*sample_size);
  for (std::size_t s = 0; s < *sample_size; ++s) {
    const auto& a = pairing[pick(rng)];
    const auto& b = pairing[pick(rng)];
    out.push_back(value(a, b));
  }
  return out;
}

std::vector<double> distortion_samples_product(const MmSpace& X, const MmSpace& Y, std::size_t count,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> px(0, X.size() - 1);
  std::uniform_int_distribution<std::size_t> py(0, Y.size() - 1);
  std::vector<double> out(count);
  for (auto& v : out) {
    const auto i = px(rng), i2 = px(rng);
    const auto j = py(rng), j2 = py(rng);
    v = std::fabs(X.dist()(i, i2) - Y.dist()(j, j2));
  }
  return out;
}

}  // namespace robustgw
