#include <algorithm>
#include <cmath>

#include "robustgw/errors.hpp"
#include "robustgw/ot.hpp"
#include "robustgw/penalty.hpp"

namespace robustgw {

Matrix cross_distances(const MmSpace& X, const MmSpace& Y) {
  require(X.has_points() && Y.has_points(), "cross distances need ambient coordinates for both spaces");
  const MetricKind metric =
      X.metric() == MetricKind::SquaredEuclidean ? MetricKind::SquaredEuclidean : MetricKind::Euclidean;
  return pairwise_distances(X.points(), Y.points(), metric);
}

double tukey_wasserstein(const MmSpace& X, const MmSpace& Y, double p, double tau, bool exact,
                         const SinkhornConfig& sinkhorn_cfg) {
  const RobustPenalty pen = RobustPenalty::tukey(p, tau);
  const Matrix cost = cross_distances(X, Y).unaryExpr([&](double d) { return pen(d); });
  double total = 0.0;
  if (exact) {
    total = exact_ot(cost, X.weights(), Y.weights()).value;
  } else {
    const auto res = sinkhorn(cost, X.weights(), Y.weights(), sinkhorn_cfg);
    total = cost.cwiseProduct(res.coupling.plan).sum();
  }
  return std::pow(std::max(0.0, total), 1.0 / p);
}

double robot_distance(const MmSpace& X, const MmSpace& Y, double lambda) {
  require(lambda >= 0.0, "lambda must be >= 0");
  const Matrix cost = cross_distances(X, Y).cwiseMin(2.0 * lambda);
  return exact_ot(cost, X.weights(), Y.weights()).value;
}

double wasserstein_from_cost(const Matrix& cost_p, const Vector& mu, const Vector& nu, double p,
                             const ExactOtOptions& opts) {
  require(p >= 1.0, "p must be >= 1");
  return std::pow(std::max(0.0, exact_ot(cost_p, mu, nu, opts).value), 1.0 / p);
}

RobustOtResult robust_ot_from_cost(const Matrix& cost_p, const Vector& mu, const Vector& nu, double eps,
                                   std::optional<double> eps2_opt, double p, const ExactOtOptions& opts) {
  const double eps2 = eps2_opt.value_or(eps);
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0, 1)");
  require(eps2 >= 0.0 && eps2 < 1.0, "eps2 must lie in [0, 1)");
  require(p >= 1.0, "p must be >= 1");
  const auto m = cost_p.rows(), n = cost_p.cols();
  require(mu.size() == m && nu.size() == n, "marginals do not match the cost shape");
  require(cost_p.allFinite() && (cost_p.array() >= 0.0).all(), "cost must be finite and nonnegative");

  const double ra = 1.0 / (1.0 - eps), rb = 1.0 / (1.0 - eps2);
  Matrix aug = Matrix::Zero(m + 1, n + 1);
  aug.topLeftCorner(m, n) = cost_p;
  // The slack-slack cell is never worth using, which pins the real-real mass to one.
  aug(m, n) = cost_p.maxCoeff() + 1.0;
  Vector a(m + 1), b(n + 1);
  a.head(m) = mu * ra;
  a[m] = eps2 * rb;
  b.head(n) = nu * rb;
  b[n] = eps * ra;

  ExactOtOptions aug_opts = opts;
  aug_opts.max_entries = std::max(opts.max_entries, static_cast<std::size_t>((m + 1) * (n + 1)));
  require(static_cast<std::size_t>(m * n) <= opts.max_entries, "exact solver limit exceeded");
  const ExactOtResult sol = exact_ot(aug, a, b, aug_opts);

  RobustOtResult out;
  out.coupling.plan = sol.coupling.plan.topLeftCorner(m, n);
  out.coupling.row_marginal = out.coupling.plan.rowwise().sum();
  out.coupling.col_marginal = out.coupling.plan.colwise().sum().transpose();
  out.cost = cost_p.cwiseProduct(out.coupling.plan).sum();
  out.value = std::pow(std::max(0.0, out.cost), 1.0 / p);

  RobustDual& d = out.dual;
  const double Us = sol.u[m], Vs = sol.v[n];
  d.t = -(Us + Vs);
  d.u = -(sol.u.head(m).array() + Vs);
  d.v = -(sol.v.head(n).array() + Us);
  d.objective = d.t - ra * mu.dot(d.u) - rb * nu.dot(d.v);
  double viol = std::max(0.0, -d.u.minCoeff());
  viol = std::max(viol, -d.v.minCoeff());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) viol = std::max(viol, d.t - d.u[i] - d.v[j] - cost_p(i, j));
  d.max_violation = viol;
  d.phi = (d.t - d.u.array()).matrix();
  d.psi = -d.v;
  d.potential_objective = ra * mu.dot(d.phi) + rb * nu.dot(d.psi) - eps * ra * d.phi.maxCoeff() -
                          eps2 * rb * d.psi.maxCoeff();
  return out;
}

double robust_w_eps(const MmSpace& X, const MmSpace& Y, double p, double eps, std::optional<double> eps2,
                    const ExactOtOptions& opts) {
  require(eps < 1.0, "eps must be < 1");
  const Matrix cost = cross_distances(X, Y).unaryExpr([&](double d) { return pow_abs(d, p); });
  return robust_ot_from_cost(cost, X.weights(), Y.weights(), eps, eps2, p, opts).value;
}

double levy_prokhorov_from_distances(const Matrix& cross, const Vector& mu, const Vector& nu, double lambda,
                                     std::optional<double> tol_opt) {
  require(lambda > 0.0, "lambda must be > 0");
  const double tol = tol_opt.value_or(1e-4 * lambda);
  require(tol > 0.0, "bisection tolerance must be > 0");
  const Matrix trunc = cross.cwiseMin(lambda);
  auto feasible = [&](double e) {
    const Matrix cost = (trunc.array() > e).cast<double>().matrix();
    return exact_ot(cost, mu, nu).value <= e + 1e-12;
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = lambda;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double levy_prokhorov_trunc(const MmSpace& X, const MmSpace& Y, double lambda, std::optional<double> tol) {
  return levy_prokhorov_from_distances(cross_distances(X, Y), X.weights(), Y.weights(), lambda, tol);
}

}  // namespace robustgw
