#include "robustgw/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>

#include "robustgw/errors.hpp"
#include "robustgw/lrgw.hpp"

namespace robustgw {

void GaussianComponent::validate() const {
  require(mean.size() >= 1, "gaussian mean must be non-empty");
  require(cov.rows() == mean.size() && cov.cols() == mean.size(), "covariance shape does not match the mean");
  require(mean.allFinite() && cov.allFinite(), "gaussian parameters must be finite");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, "covariance must be positive semidefinite");
}

void GaussianMixture::validate() const {
  require(!components.empty(), "a mixture needs at least one component");
  require(static_cast<std::size_t>(weights.size()) == components.size(), "mixture weights do not match components");
  require(weights.allFinite() && (weights.array() >= 0.0).all(), "mixture weights must be nonnegative");
  require(std::fabs(weights.sum() - 1.0) <= 1e-9, "mixture weights must sum to 1");
  for (const auto& c : components) {
    c.validate();
    require(c.dim() == components.front().dim(), "mixture components have different dimensions");
  }
}

Matrix psd_sqrt(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (S + S.transpose())));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double w2_gaussian(const GaussianComponent& g0, const GaussianComponent& g1) {
  require(g0.dim() == g1.dim(), "gaussians have different dimensions");
  const Matrix r0 = psd_sqrt(g0.cov);
  const Matrix cross = psd_sqrt(r0 * g1.cov * r0);
  const double sq = (g0.mean - g1.mean).squaredNorm() + (g0.cov + g1.cov - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, sq));
}

Matrix mixture_distance_matrix(const GaussianMixture& mix) {
  const auto k = static_cast<Eigen::Index>(mix.size());
  Matrix c = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index s = i + 1; s < k; ++s) c(i, s) = c(s, i) = w2_gaussian(mix.components[i], mix.components[s]);
  return c;
}

namespace {

GwResult finish(GwResult r) {
  r.value_with_root = std::sqrt(std::max(0.0, r.value));
  return r;
}

GwConfig mixture_config(const GwConfig& cfg) {
  GwConfig run = cfg;
  if (run.penalty.kind() == PenaltyKind::SquaredP) run.penalty = RobustPenalty::squared(2.0);
  return run;
}

}  // namespace

GwResult mixture_gw(const GaussianMixture& a, const GaussianMixture& b, const GwConfig& cfg) {
  a.validate();
  b.validate();
  return finish(egw_solve(mixture_distance_matrix(a), a.weights / a.weights.sum(), mixture_distance_matrix(b),
                          b.weights / b.weights.sum(), mixture_config(cfg)));
}

Matrix sample_gaussian(const GaussianComponent& g, int samples, std::mt19937_64& rng) {
  require(samples >= 1, "need at least one sample");
  const Matrix root = psd_sqrt(g.cov);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out(samples, g.dim());
  for (int s = 0; s < samples; ++s) {
    Vector z(g.dim());
    for (Eigen::Index k = 0; k < g.dim(); ++k) z[k] = gauss(rng);
    out.row(s) = (g.mean + root * z).transpose();
  }
  return out;
}

std::vector<MmSpace> sample_components(const GaussianMixture& mix, int samples, std::uint64_t seed) {
  mix.validate();
  std::mt19937_64 rng(seed);
  std::vector<MmSpace> atoms;
  atoms.reserve(mix.size());
  for (const auto& c : mix.components) atoms.push_back(build_space(sample_gaussian(c, samples, rng)));
  return atoms;
}

GwResult mixture_gw_robust_atoms(std::span<const MmSpace> atoms_a, const Vector& weights_a, const GaussianMixture& b,
                                 double eps, const GwConfig& cfg, const RobustMixtureOptions& opts) {
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0, 1)");
  b.validate();
  require(static_cast<std::size_t>(weights_a.size()) == atoms_a.size(), "weights do not match the atoms");
  const Matrix ca = pmm_robust_matrix(atoms_a, eps, opts.p, opts.exact);
  const Vector wa = validate_weights(weights_a, atoms_a.size());
  return finish(egw_solve(ca, wa, mixture_distance_matrix(b), b.weights / b.weights.sum(), mixture_config(cfg)));
}

GwResult mixture_gw_robust(const GaussianMixture& a, const GaussianMixture& b, double eps, const GwConfig& cfg,
                           const RobustMixtureOptions& opts) {
  const auto atoms = sample_components(a, opts.samples, opts.seed);
  return mixture_gw_robust_atoms(atoms, a.weights, b, eps, cfg, opts);
}

}  // namespace robustgw
