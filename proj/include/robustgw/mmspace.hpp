#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robustgw/types.hpp"

namespace robustgw {

enum class MetricKind { Euclidean, SquaredEuclidean, InnerProduct, Precomputed };

std::string to_string(MetricKind metric);
MetricKind metric_kind_from_string(const std::string& name);

/// Finite metric-measure space: a distance matrix, a probability vector and,
/// optionally, the ambient coordinates the distances were computed from.
class MmSpace {
 public:
  MmSpace(Matrix dist, Vector weights, std::optional<Matrix> points = std::nullopt,
          MetricKind metric = MetricKind::Precomputed);

  const Matrix& dist() const { return dist_; }
  const Vector& weights() const { return weights_; }
  bool has_points() const { return points_.has_value(); }
  const Matrix& points() const;
  MetricKind metric() const { return metric_; }
  std::size_t size() const { return static_cast<std::size_t>(dist_.rows()); }
  double diameter() const { return dist_.size() == 0 ? 0.0 : dist_.maxCoeff(); }

  /// Copy with the distance matrix replaced (e.g. truncated); points are dropped.
  MmSpace with_dist(Matrix dist) const;

 private:
  Matrix dist_;
  Vector weights_;
  std::optional<Matrix> points_;
  MetricKind metric_;
};

Vector uniform_weights(std::size_t n);

/// Checks a weight vector and renormalizes it to sum to one exactly.
Vector validate_weights(const Vector& weights, std::size_t n);

/// Distances between the rows of `a` and the rows of `b`.
Matrix pairwise_distances(const Matrix& a, const Matrix& b, MetricKind metric);

MmSpace build_space(const Matrix& points, const std::optional<Vector>& weights = std::nullopt,
                    MetricKind metric = MetricKind::Euclidean);

/// Space from a user-supplied distance matrix. Triangle checks are O(n^3) and opt-in.
MmSpace space_from_distances(Matrix dist, const std::optional<Vector>& weights = std::nullopt,
                             bool check_triangle = false);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// |C^X_{ii'} - C^Y_{jj'}| over pairs of pairs (i,j),(i',j') drawn from `pairing`.
/// Without a sample size every ordered pair of pairs is returned.
std::vector<double> distortion_samples(const MmSpace& X, const MmSpace& Y, std::span<const IndexPair> pairing,
                                       std::optional<std::size_t> sample_size = std::nullopt,
                                       std::uint64_t seed = 0);

/// Uniform seeded draws of |C^X_{ii'} - C^Y_{jj'}| over all index 4-tuples.
std::vector<double> distortion_samples_product(const MmSpace& X, const MmSpace& Y, std::size_t count,
                                               std::uint64_t seed);

}  // namespace robustgw
