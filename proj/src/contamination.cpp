#include "robustgw/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "robustgw/errors.hpp"

namespace robustgw {

void ContaminationSpec::validate() const {
  require(alpha >= 0.0 && alpha < 1.0, "contamination alpha must lie in [0, 1)");
  if (adversary.kind == AdversaryKind::FixedPoints) {
    require(adversary.points.rows() >= 1, "fixed-point adversary needs at least one point");
    require(adversary.points.allFinite(), "fixed-point adversary points must be finite");
  }
}

namespace {

Eigen::RowVectorXd adversary_draw(const Adversary& adv, Eigen::Index dim, std::mt19937_64& rng) {
  Eigen::RowVectorXd row(dim);
  switch (adv.kind) {
    case AdversaryKind::GaussianStd: {
      std::normal_distribution<double> g(0.0, 1.0);
      for (Eigen::Index k = 0; k < dim; ++k) row[k] = g(rng);
      break;
    }
    case AdversaryKind::CauchyStd: {
      std::cauchy_distribution<double> c(0.0, 1.0);
      for (Eigen::Index k = 0; k < dim; ++k) row[k] = c(rng);
      break;
    }
    case AdversaryKind::FixedPoints: {
      require(adv.points.cols() == dim, "fixed-point adversary has the wrong dimension");
      std::uniform_int_distribution<Eigen::Index> pick(0, adv.points.rows() - 1);
      row = adv.points.row(pick(rng));
      break;
    }
  }
  return row;
}

}  // namespace

Contaminated contaminate(const Matrix& points, const ContaminationSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(points.rows());
  Contaminated out{points, {}};
  std::mt19937_64 rng(spec.seed);
  if (spec.regime == Regime::ReplaceFraction) {
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.alpha));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k entries form a uniform k-subset.
    for (std::size_t s = 0; s < k; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, n - 1);
      std::swap(idx[s], idx[pick(rng)]);
    }
    out.outliers.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.outliers.begin(), out.outliers.end());
  } else {
    std::bernoulli_distribution coin(spec.alpha);
    for (std::size_t i = 0; i < n; ++i)
      if (coin(rng)) out.outliers.push_back(i);
  }
  for (std::size_t i : out.outliers) out.points.row(i) = adversary_draw(spec.adversary, points.cols(), rng);
  return out;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ThresholdEstimate select_tau(std::span<const double> samples) {
  require(!samples.empty(), "select_tau needs at least one sample");
  std::vector<double> s(samples.begin(), samples.end());
  for (double v : s) require(std::isfinite(v) && v >= 0.0, "distortion samples must be finite and nonnegative");
  std::sort(s.begin(), s.end());
  ThresholdEstimate t;
  t.sample_size = s.size();
  const std::size_t n = s.size();
  t.median = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  double dev = 0.0;
  for (double v : s) dev += std::fabs(v - t.median);
  t.mad = dev / static_cast<double>(n);
  t.tau = t.median + 3.0 * t.mad;
  t.p95 = sorted_quantile(s, 0.95);
  t.p98 = sorted_quantile(s, 0.98);
  return t;
}

double point_diameter(const Matrix& points) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) d = std::max(d, (points.row(i) - points.row(j)).norm());
  return d;
}

namespace {

Matrix normalize_unit_diameter(Matrix pts) {
  const Eigen::RowVectorXd lo = pts.colwise().minCoeff(), hi = pts.colwise().maxCoeff();
  pts.rowwise() -= 0.5 * (lo + hi);
  const double d = point_diameter(pts);
  if (d > 0.0) pts /= d;
  return pts;
}

}  // namespace

Matrix heart_shape(std::size_t n, std::uint64_t seed, double jitter) {
  require(n >= 8, "heart_shape needs n >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix pts(static_cast<Eigen::Index>(n), 2);
  // Curve coordinates span roughly 34 units; jitter is relative to that.
  const double scale = 34.0 * jitter;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = angle(rng);
    const double s = std::sin(t);
    pts(k, 0) = 16.0 * s * s * s + scale * noise(rng);
    pts(k, 1) = 13.0 * std::cos(t) - 5.0 * std::cos(2 * t) - 2.0 * std::cos(3 * t) - std::cos(4 * t) + scale * noise(rng);
  }
  return normalize_unit_diameter(std::move(pts));
}

Matrix circle_shape(std::size_t n, std::uint64_t seed, double jitter) {
  require(n >= 2, "circle_shape needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix pts(static_cast<Eigen::Index>(n), 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = angle(rng);
    pts(k, 0) = std::cos(t) + 2.0 * jitter * noise(rng);
    pts(k, 1) = std::sin(t) + 2.0 * jitter * noise(rng);
  }
  return normalize_unit_diameter(std::move(pts));
}

Matrix two_moons(std::size_t n, std::uint64_t seed, double jitter) {
  require(n >= 2, "two_moons needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix pts(static_cast<Eigen::Index>(n), 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = angle(rng);
    if (k % 2 == 0) {
      pts(k, 0) = std::cos(t);
      pts(k, 1) = std::sin(t);
    } else {
      pts(k, 0) = 1.0 - std::cos(t);
      pts(k, 1) = 0.5 - std::sin(t);
    }
    pts(k, 0) += 3.0 * jitter * noise(rng);
    pts(k, 1) += 3.0 * jitter * noise(rng);
  }
  return normalize_unit_diameter(std::move(pts));
}

Matrix rotate2d(const Matrix& points, double angle) {
  require(points.cols() == 2, "rotate2d expects 2-d points");
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return points * r.transpose();
}

std::string to_string(Regime regime) {
  return regime == Regime::HuberMixture ? "huber_mixture" : "replace_fraction";
}

std::string to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::GaussianStd:
      return "gaussian";
    case AdversaryKind::CauchyStd:
      return "cauchy";
    case AdversaryKind::FixedPoints:
      return "fixed";
  }
  return "unknown";
}

Regime regime_from_string(const std::string& name) {
  if (name == "huber_mixture" || name == "huber") return Regime::HuberMixture;
  if (name == "replace_fraction" || name == "replace") return Regime::ReplaceFraction;
  throw InvalidArgument("unknown contamination regime: " + name);
}

AdversaryKind adversary_from_string(const std::string& name) {
  if (name == "gaussian") return AdversaryKind::GaussianStd;
  if (name == "cauchy") return AdversaryKind::CauchyStd;
  if (name == "fixed") return AdversaryKind::FixedPoints;
  throw InvalidArgument("unknown adversary: " + name);
}

}  // namespace robustgw
