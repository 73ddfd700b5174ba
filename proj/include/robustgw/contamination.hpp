#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "robustgw/types.hpp"

namespace robustgw {

enum class Regime { HuberMixture, ReplaceFraction };

enum class AdversaryKind { GaussianStd, CauchyStd, FixedPoints };

struct Adversary {
  AdversaryKind kind = AdversaryKind::CauchyStd;
  /// Candidate rows for FixedPoints; draws are uniform over them.
  Matrix points;
};

struct ContaminationSpec {
  Regime regime = Regime::ReplaceFraction;
  double alpha = 0.0;
  Adversary adversary;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Contaminated {
  Matrix points;
  /// Sorted indices of replaced rows.
  std::vector<std::size_t> outliers;
};

Contaminated contaminate(const Matrix& points, const ContaminationSpec& spec);

struct ThresholdEstimate {
  double tau = 0.0;
  double median = 0.0;
  double mad = 0.0;
  double p95 = 0.0;
  double p98 = 0.0;
  std::size_t sample_size = 0;
};

/// Type-7 (linear interpolation) quantile of already sorted data, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

/// tau = median + 3 * mean absolute deviation about the median.
ThresholdEstimate select_tau(std::span<const double> samples);

/// Parametric heart curve, rescaled to unit diameter, with seeded jitter.
Matrix heart_shape(std::size_t n, std::uint64_t seed, double jitter = 0.01);
/// Unit-diameter circle with seeded jitter.
Matrix circle_shape(std::size_t n, std::uint64_t seed, double jitter = 0.01);
/// Two interleaved half circles, rescaled to unit diameter.
Matrix two_moons(std::size_t n, std::uint64_t seed, double jitter = 0.02);

/// Rotates the rows of an n x 2 matrix about the origin.
Matrix rotate2d(const Matrix& points, double angle);

/// Euclidean diameter of a point cloud.
double point_diameter(const Matrix& points);

std::string to_string(Regime regime);
std::string to_string(AdversaryKind kind);
Regime regime_from_string(const std::string& name);
AdversaryKind adversary_from_string(const std::string& name);

}  // namespace robustgw
