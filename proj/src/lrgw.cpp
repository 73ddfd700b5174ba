#include "robustgw/lrgw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustgw/errors.hpp"
#include "robustgw/penalty.hpp"

namespace robustgw {

MmSpace truncate_space(const MmSpace& X, double lambda) {
  require(lambda >= 0.0 && !std::isnan(lambda), "lambda must be >= 0");
  return X.with_dist(X.dist().cwiseMin(lambda));
}

GwResult lrgw_solve(const MmSpace& X, const MmSpace& Y, double lambda, const GwConfig& cfg) {
  return egw_solve(truncate_space(X, lambda), truncate_space(Y, lambda), cfg);
}

double lrgw_distance(const MmSpace& X, const MmSpace& Y, double lambda, const GwConfig& cfg) {
  return report_distance(cfg.penalty, lrgw_solve(X, Y, lambda, cfg).value);
}

namespace {

void require_nonnegative_points(const MmSpace& X) {
  require(X.has_points(), "inner-product GW needs ambient coordinates");
  require((X.points().array() >= 0.0).all(), "inner-product GW needs nonnegative coordinates");
}

double weighted_second_moment(const Matrix& features, const Vector& w) {
  return w.dot(features.rowwise().squaredNorm());
}

struct OtStep {
  Matrix plan;
  double value;
};

OtStep solve_ot(const Matrix& cost, const Vector& mu, const Vector& nu, const LrigwOptions& opts) {
  if (static_cast<std::size_t>(cost.size()) <= opts.exact.max_entries) {
    auto r = exact_ot(cost, mu, nu, opts.exact);
    return {std::move(r.coupling.plan), r.value};
  }
  SinkhornConfig cfg = opts.sinkhorn;
  const double shift = cost.minCoeff();
  const double scale = std::max(cost.maxCoeff() - shift, 1e-300);
  cfg.epsilon *= scale;
  auto r = sinkhorn(cost.array() - shift, mu, nu, cfg);
  const double value = cost.cwiseProduct(r.coupling.plan).sum();
  return {std::move(r.coupling.plan), value};
}

}  // namespace

Matrix truncated_features(const Matrix& points, double lambda) {
  require(lambda > 0.0, "lambda must be > 0");
  require(points.cols() >= 1, "points need at least one coordinate");
  const double level = std::sqrt(lambda / static_cast<double>(points.cols()));
  return points.cwiseMin(level);
}

double lrigw_f1(const MmSpace& X, const MmSpace& Y, double lambda) {
  require_nonnegative_points(X);
  require_nonnegative_points(Y);
  require(lambda > 0.0, "lambda must be > 0");
  auto part = [lambda](const MmSpace& S) {
    const Matrix gram = (S.points() * S.points().transpose()).cwiseMin(lambda);
    const Vector& w = S.weights();
    return w.dot(gram.cwiseProduct(gram) * w);
  };
  return part(X) + part(Y);
}

double lrigw_objective(const MmSpace& X, const MmSpace& Y, double lambda, const Matrix& A, const LrigwOptions& opts) {
  const Matrix lx = truncated_features(X.points(), lambda);
  const Matrix ly = truncated_features(Y.points(), lambda);
  require(A.rows() == lx.cols() && A.cols() == ly.cols(), "A has the wrong shape");
  const Matrix cost = -8.0 * lx * A * ly.transpose();
  return 8.0 * A.squaredNorm() + solve_ot(cost, X.weights(), Y.weights(), opts).value;
}

LrigwResult lrigw_bound(const MmSpace& X, const MmSpace& Y, double lambda, const LrigwOptions& opts) {
  require_nonnegative_points(X);
  require_nonnegative_points(Y);
  require(lambda > 0.0, "lambda must be > 0");
  require(opts.max_iter >= 1, "max_iter must be >= 1");
  require(opts.tol >= 0.0, "tol must be >= 0");
  require(opts.probe_step >= 0.0, "probe_step must be >= 0");

  const Matrix lx = truncated_features(X.points(), lambda);
  const Matrix ly = truncated_features(Y.points(), lambda);
  const Vector& mu = X.weights();
  const Vector& nu = Y.weights();

  LrigwResult res;
  res.f1 = lrigw_f1(X, Y, lambda);
  LrigwState& st = res.state;
  st.lambda = lambda;
  st.m_bound = 0.5 * std::sqrt(weighted_second_moment(lx, mu) * weighted_second_moment(ly, nu));

  auto a_step = [&](const Matrix& plan) {
    return Matrix((0.5 * lx.transpose() * plan * ly).cwiseMax(0.0).cwiseMin(st.m_bound));
  };

  auto evaluate = [&](const Matrix& A) {
    OtStep ot = solve_ot(-8.0 * lx * A * ly.transpose(), mu, nu, opts);
    const double obj = 8.0 * A.squaredNorm() + ot.value;
    if (!std::isfinite(obj)) throw NumericalError("inner-product GW bound became non-finite");
    return std::pair{obj, std::move(ot.plan)};
  };
  auto accept = [&](const Matrix& A, double obj, Matrix plan) {
    res.trace.push_back(obj);
    st.A = A;
    st.plan.plan = std::move(plan);
    st.objective = obj;
  };

  Matrix A = a_step(mu * nu.transpose());
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    auto [obj, plan] = evaluate(A);
    res.iterations = it + 1;
    accept(A, obj, std::move(plan));
    if (std::fabs(prev - obj) < opts.tol) {
      // Ties in the transport step leave kinks where the alternation stalls; try single-entry moves.
      double best = obj - opts.tol;
      Matrix best_a, best_plan;
      for (Eigen::Index a = 0; opts.probe_step > 0.0 && a < A.rows(); ++a)
        for (Eigen::Index b = 0; b < A.cols(); ++b)
          for (double h : {opts.probe_step, -opts.probe_step}) {
            Matrix B = A;
            B(a, b) = std::clamp(B(a, b) + h, 0.0, st.m_bound);
            auto [v, pl] = evaluate(B);
            if (v < best) {
              best = v;
              best_a = std::move(B);
              best_plan = std::move(pl);
            }
          }
      if (best_a.size() == 0) {
        res.converged = true;
        break;
      }
      accept(best_a, best, best_plan);
      obj = best;
    }
    prev = obj;
    A = a_step(st.plan.plan);
  }
  st.plan.row_marginal = mu;
  st.plan.col_marginal = nu;
  res.f2_bar = st.objective;
  res.total = res.f1 + res.f2_bar;
  return res;
}

PairCostTensor lrigw_f2_tensor(const MmSpace& X, const MmSpace& Y, double lambda) {
  require_nonnegative_points(X);
  require_nonnegative_points(Y);
  const Matrix lx = truncated_features(X.points(), lambda);
  const Matrix ly = truncated_features(Y.points(), lambda);
  const Matrix gx = lx * lx.transpose();
  const Matrix gy = ly * ly.transpose();
  PairCostTensor L;
  L.m = X.size();
  L.n = Y.size();
  L.data.resize(L.m * L.n * L.m * L.n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < L.m; ++i)
    for (std::size_t j = 0; j < L.n; ++j)
      for (std::size_t i2 = 0; i2 < L.m; ++i2)
        for (std::size_t j2 = 0; j2 < L.n; ++j2) L.data[k++] = -2.0 * gx(i, i2) * gy(j, j2);
  return L;
}

namespace {

Matrix atom_cost(const MmSpace& a, const MmSpace& b, double p) {
  return cross_distances(a, b).unaryExpr([p](double d) { return pow_abs(d, p); });
}

}  // namespace

Matrix pmm_robust_matrix(std::span<const MmSpace> atoms, double eps, double p, const ExactOtOptions& opts) {
  const auto k = static_cast<Eigen::Index>(atoms.size());
  require(k >= 1, "need at least one atom");
  Matrix c = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index s = i + 1; s < k; ++s) {
      const double v =
          robust_ot_from_cost(atom_cost(atoms[i], atoms[s], p), atoms[i].weights(), atoms[s].weights(), eps, eps, p, opts)
              .value;
      c(i, s) = c(s, i) = v;
    }
  return c;
}

Matrix pmm_exact_matrix(std::span<const MmSpace> atoms, double p, const ExactOtOptions& opts) {
  const auto k = static_cast<Eigen::Index>(atoms.size());
  require(k >= 1, "need at least one atom");
  Matrix c = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index s = i + 1; s < k; ++s) {
      const double v = wasserstein_from_cost(atom_cost(atoms[i], atoms[s], p), atoms[i].weights(), atoms[s].weights(), p, opts);
      c(i, s) = c(s, i) = v;
    }
  return c;
}

PmmResult lrgw_pmm(std::span<const MmSpace> atoms_x, const Vector& a, std::span<const MmSpace> atoms_y,
                   const Vector& b, double eps, double p, const GwConfig& cfg) {
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0, 1)");
  require(static_cast<std::size_t>(a.size()) == atoms_x.size(), "weights a do not match the X atoms");
  require(static_cast<std::size_t>(b.size()) == atoms_y.size(), "weights b do not match the Y atoms");
  PmmResult out;
  out.cx = pmm_robust_matrix(atoms_x, eps, p);
  out.cy = pmm_exact_matrix(atoms_y, p);
  GwConfig run = cfg;
  run.penalty = RobustPenalty::squared(p);
  out.gw = egw_solve(out.cx, validate_weights(a, atoms_x.size()), out.cy, validate_weights(b, atoms_y.size()), run);
  out.value = std::pow(out.gw.value, 1.0 / p);
  return out;
}

}  // namespace robustgw
