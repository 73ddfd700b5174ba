#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "robustgw/gw.hpp"
#include "robustgw/mmspace.hpp"
#include "robustgw/ot.hpp"

namespace robustgw {

struct GaussianComponent {
  Vector mean;
  Matrix cov;

  void validate() const;
  Eigen::Index dim() const { return mean.size(); }
};

struct GaussianMixture {
  Vector weights;
  std::vector<GaussianComponent> components;

  void validate() const;
  Eigen::Index dim() const { return components.empty() ? 0 : components.front().dim(); }
  std::size_t size() const { return components.size(); }
};

/// Symmetric PSD square root with eigenvalues clamped at zero.
Matrix psd_sqrt(const Matrix& S);

/// Closed-form 2-Wasserstein distance between two Gaussians (not squared).
double w2_gaussian(const GaussianComponent& g0, const GaussianComponent& g1);

/// C_is = W2(alpha_i, alpha_s)
Matrix mixture_distance_matrix(const GaussianMixture& mix);

/// Entropic GW on the component distance matrices with weights a, b.
GwResult mixture_gw(const GaussianMixture& a, const GaussianMixture& b, const GwConfig& cfg);

struct RobustMixtureOptions {
  int samples = 200;
  std::uint64_t seed = 0;
  double p = 2.0;
  ExactOtOptions exact{250000, 32};
};

/// Seeded samples from every component, uniform weights.
std::vector<MmSpace> sample_components(const GaussianMixture& mix, int samples, std::uint64_t seed);
Matrix sample_gaussian(const GaussianComponent& g, int samples, std::mt19937_64& rng);

/// Robust variant: A-side distances are W^eps_p between sampled components,
/// B-side distances use the closed form.
GwResult mixture_gw_robust(const GaussianMixture& a, const GaussianMixture& b, double eps, const GwConfig& cfg,
                           const RobustMixtureOptions& opts = {});
/// Same with caller-supplied A-side atoms (e.g. contaminated samples).
GwResult mixture_gw_robust_atoms(std::span<const MmSpace> atoms_a, const Vector& weights_a,
                                 const GaussianMixture& b, double eps, const GwConfig& cfg,
                                 const RobustMixtureOptions& opts = {});

}  // namespace robustgw
