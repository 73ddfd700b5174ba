#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "robustgw/errors.hpp"
#include "robustgw/ot.hpp"

namespace robustgw {

void SinkhornConfig::validate() const {
  require(epsilon > 0.0 && std::isfinite(epsilon), "sinkhorn epsilon must be > 0");
  require(tol > 0.0, "sinkhorn tol must be > 0");
  require(max_iter >= 1, "sinkhorn max_iter must be >= 1");
  require(check_every >= 1, "sinkhorn check_every must be >= 1");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Absorb scalings into the kernel once they leave [e^-50, e^50].
constexpr double kAbsorbBound = 50.0;
constexpr double kFlushLog = -600.0;

struct CoreOutput {
  Matrix plan;
  Vector log_a, log_b;
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
  bool log_domain = false;
  std::vector<double> trace;
};

double violation_of(const Matrix& plan, const Vector& mu, const Vector& nu) {
  return (plan.rowwise().sum() - mu).lpNorm<1>() + (plan.colwise().sum().transpose() - nu).lpNorm<1>();
}

double log_sum_exp(const double* x, Eigen::Index n, Eigen::Index stride = 1) {
  double mx = kNegInf;
  for (Eigen::Index k = 0; k < n; ++k) mx = std::max(mx, x[k * stride]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::exp(x[k * stride] - mx);
  return mx + std::log(s);
}

Matrix plan_from_logs(const Matrix& logK, const Vector& la, const Vector& lb) {
  Matrix p(logK.rows(), logK.cols());
  for (Eigen::Index i = 0; i < logK.rows(); ++i)
    for (Eigen::Index j = 0; j < logK.cols(); ++j) p(i, j) = std::exp(logK(i, j) + la[i] + lb[j]);
  return p;
}

// Column log-sum-exp of logK + la (row offsets) for all columns at once.
void column_lse(const Matrix& logK, const Vector& la, Vector& out, Vector& work) {
  const auto m = logK.rows(), n = logK.cols();
  out.setConstant(n, kNegInf);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out[j] = std::max(out[j], logK(i, j) + la[i]);
  work.setZero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (out[j] > kNegInf) work[j] += std::exp(logK(i, j) + la[i] - out[j]);
  for (Eigen::Index j = 0; j < n; ++j)
    if (out[j] > kNegInf) out[j] += std::log(work[j]);
}

void run_log(const Matrix& logK, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg, Vector la,
             Vector lb, CoreOutput& out) {
  const auto m = logK.rows(), n = logK.cols();
  const Vector lmu = mu.array().log(), lnu = nu.array().log();
  Vector col(n), work(n);
  Matrix shifted(m, n);
  out.log_domain = true;
  for (int it = out.iterations; it < cfg.max_iter; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) shifted(i, j) = logK(i, j) + lb[j];
      la[i] = lmu[i] - log_sum_exp(shifted.data() + i * n, n);
    }
    column_lse(logK, la, col, work);
    lb = lnu - col;
    if (!la.allFinite() || !lb.allFinite()) {
      throw NumericalError("sinkhorn: a marginal row or column has no reachable mass; increase epsilon");
    }
    out.iterations = it + 1;
    if (out.iterations % cfg.check_every == 0 || out.iterations == cfg.max_iter) {
      out.plan = plan_from_logs(logK, la, lb);
      out.violation = violation_of(out.plan, mu, nu);
      out.trace.push_back(out.violation);
      if (out.violation <= cfg.tol) {
        out.converged = true;
        break;
      }
    }
  }
  if (out.plan.size() == 0 || !out.converged) {
    out.plan = plan_from_logs(logK, la, lb);
    out.violation = violation_of(out.plan, mu, nu);
  }
  out.log_a = std::move(la);
  out.log_b = std::move(lb);
}

// Plain kernel scaling. Returns false if the iterates stop being finite.
bool run_scaling(const Matrix& logK, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg,
                 const Vector& la0, const Vector& lb0, CoreOutput& out) {
  const Matrix K = logK.array().exp();
  // Anything below the smallest normal double counts as underflow.
  constexpr double kTiny = std::numeric_limits<double>::min();
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    if (K.row(i).maxCoeff() < kTiny)
      throw NumericalError("sinkhorn kernel underflow: exp(-cost/epsilon) has an all-zero row; "
                           "increase epsilon or rescale the cost");
  for (Eigen::Index j = 0; j < K.cols(); ++j)
    if (K.col(j).maxCoeff() < kTiny)
      throw NumericalError("sinkhorn kernel underflow: exp(-cost/epsilon) has an all-zero column; "
                           "increase epsilon or rescale the cost");
  Vector a = la0.array().exp(), b = lb0.array().exp();
  for (int it = 0; it < cfg.max_iter; ++it) {
    a = mu.cwiseQuotient(K * b);
    b = nu.cwiseQuotient(K.transpose() * a);
    if (!a.allFinite() || !b.allFinite() || (a.array() <= 0.0).any() || (b.array() <= 0.0).any()) return false;
    out.iterations = it + 1;
    if (out.iterations % cfg.check_every == 0 || out.iterations == cfg.max_iter) {
      out.violation = (a.cwiseProduct(K * b) - mu).lpNorm<1>();
      out.trace.push_back(out.violation);
      if (out.violation <= cfg.tol) {
        out.converged = true;
        break;
      }
    }
  }
  out.plan = a.asDiagonal() * K * b.asDiagonal();
  out.violation = violation_of(out.plan, mu, nu);
  out.log_a = a.array().log();
  out.log_b = b.array().log();
  return true;
}

// Scaling on top of log-potentials f, g, re-absorbed into the kernel when the
// scalings drift. Falls back to log-domain updates if a kernel row underflows.
void run_stabilized(const Matrix& logK, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg,
                    const SinkhornScalings* warm, CoreOutput& out) {
  const auto m = logK.rows(), n = logK.cols();
  Vector f(m), g(n);
  if (warm) {
    // One log-domain sweep from the warm potentials, so rows whose cost moved
    // far since the warm start do not underflow once absorbed.
    g = warm->log_b;
    Vector shifted(n), work(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      shifted = logK.row(i).transpose() + g;
      f[i] = std::log(mu[i]) - log_sum_exp(shifted.data(), n);
    }
    column_lse(logK, f, g, work);
    g = nu.array().log().matrix() - g;
  } else {
    // Row then column max shift: every row and column of the kernel attains 1.
    for (Eigen::Index i = 0; i < m; ++i) f[i] = -logK.row(i).maxCoeff();
    g.setConstant(kNegInf);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g[j] = std::max(g[j], logK(i, j) + f[i]);
    g = -g;
  }
  Matrix K(m, n);
  auto absorb = [&] {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        // Entries this small only contribute subnormals, which are very slow to multiply.
        const double e = logK(i, j) + f[i] + g[j];
        K(i, j) = e < kFlushLog ? 0.0 : std::exp(e);
      }
  };
  absorb();
  Vector u = Vector::Ones(m), v = Vector::Ones(n);
  Vector Kv(m), Ktu(n);
  bool failed = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    Kv.noalias() = K * v;
    u = mu.cwiseQuotient(Kv);
    Ktu.noalias() = K.transpose() * u;
    v = nu.cwiseQuotient(Ktu);
    if (!u.allFinite() || !v.allFinite() || (u.array() <= 0.0).any() || (v.array() <= 0.0).any()) {
      failed = true;
      break;
    }
    out.iterations = it + 1;
    const double spread = std::max(u.array().log().abs().maxCoeff(), v.array().log().abs().maxCoeff());
    const bool check = out.iterations % cfg.check_every == 0 || out.iterations == cfg.max_iter;
    if (check) {
      out.violation = (u.cwiseProduct(K * v) - mu).lpNorm<1>();
      out.trace.push_back(out.violation);
      if (out.violation <= cfg.tol) {
        out.converged = true;
        break;
      }
    }
    if (spread > kAbsorbBound) {
      f += u.array().log().matrix();
      g += v.array().log().matrix();
      u.setOnes();
      v.setOnes();
      absorb();
    }
  }
  if (failed) {
    out.converged = false;
    run_log(logK, mu, nu, cfg, f, g, out);
    return;
  }
  out.plan = u.asDiagonal() * K * v.asDiagonal();
  out.violation = violation_of(out.plan, mu, nu);
  out.log_a = f + u.array().log().matrix();
  out.log_b = g + v.array().log().matrix();
}

SinkhornDomain resolve_domain(const Matrix& logK, SinkhornDomain requested) {
  if (requested != SinkhornDomain::Auto) return requested;
  // cost/epsilon = -logK, so epsilon < 0.05 * median(cost - min cost) reads
  // median(max logK - logK) > 20.
  std::vector<double> spread(logK.data(), logK.data() + logK.size());
  const double top = logK.maxCoeff();
  for (auto& s : spread) s = top - s;
  const auto mid = spread.begin() + static_cast<std::ptrdiff_t>(spread.size() / 2);
  std::nth_element(spread.begin(), mid, spread.end());
  return *mid > 20.0 ? SinkhornDomain::Log : SinkhornDomain::Scaling;
}

CoreOutput solve_positive(const Matrix& logK, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg,
                          const SinkhornScalings* warm) {
  CoreOutput out;
  const Vector la0 = warm ? warm->log_a : Vector::Zero(logK.rows());
  const Vector lb0 = warm ? warm->log_b : Vector::Zero(logK.cols());
  const SinkhornDomain domain = resolve_domain(logK, cfg.domain);
  switch (domain) {
    case SinkhornDomain::Log:
      run_log(logK, mu, nu, cfg, la0, lb0, out);
      break;
    case SinkhornDomain::Scaling:
      if (!run_scaling(logK, mu, nu, cfg, la0, lb0, out)) {
        if (cfg.domain == SinkhornDomain::Scaling)
          throw NumericalError("sinkhorn scalings overflowed; increase epsilon or use the log domain");
        out = CoreOutput{};
        run_log(logK, mu, nu, cfg, la0, lb0, out);
      }
      break;
    case SinkhornDomain::Stabilized:
    case SinkhornDomain::Auto:
      run_stabilized(logK, mu, nu, cfg, warm, out);
      break;
  }
  return out;
}

}  // namespace

SinkhornResult sinkhorn_log_kernel(const Matrix& log_kernel, const Vector& mu, const Vector& nu,
                                   const SinkhornConfig& cfg, const SinkhornScalings* warm_start) {
  cfg.validate();
  const auto m = log_kernel.rows(), n = log_kernel.cols();
  require(m >= 1 && n >= 1, "sinkhorn needs a non-empty kernel");
  require(mu.size() == m && nu.size() == n, "marginals do not match the kernel shape");
  require(mu.allFinite() && nu.allFinite() && (mu.array() >= 0.0).all() && (nu.array() >= 0.0).all(),
          "marginals must be finite and nonnegative");
  require(std::fabs(mu.sum() - nu.sum()) <= 1e-6 * std::max(1.0, mu.sum()), "marginals must have equal mass");
  require(!log_kernel.array().isNaN().any() && (log_kernel.array() < std::numeric_limits<double>::infinity()).all(),
          "log kernel must not contain NaN or +inf");
  if (warm_start) {
    require(warm_start->log_a.size() == m && warm_start->log_b.size() == n, "warm start has the wrong shape");
  }

  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < m; ++i)
    if (mu[i] > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < n; ++j)
    if (nu[j] > 0.0) cols.push_back(j);
  require(!rows.empty() && !cols.empty(), "marginals must have positive mass");

  SinkhornResult result;
  result.coupling.row_marginal = mu;
  result.coupling.col_marginal = nu;
  CoreOutput core;
  if (static_cast<Eigen::Index>(rows.size()) == m && static_cast<Eigen::Index>(cols.size()) == n) {
    core = solve_positive(log_kernel, mu, nu, cfg, warm_start);
    result.coupling.plan = std::move(core.plan);
    result.scalings = {std::move(core.log_a), std::move(core.log_b)};
  } else {
    const auto rm = static_cast<Eigen::Index>(rows.size()), rn = static_cast<Eigen::Index>(cols.size());
    Matrix sub(rm, rn);
    Vector smu(rm), snu(rn);
    for (Eigen::Index a = 0; a < rm; ++a) {
      smu[a] = mu[rows[a]];
      for (Eigen::Index b = 0; b < rn; ++b) sub(a, b) = log_kernel(rows[a], cols[b]);
    }
    for (Eigen::Index b = 0; b < rn; ++b) snu[b] = nu[cols[b]];
    SinkhornScalings sub_warm;
    if (warm_start) {
      sub_warm.log_a.resize(rm);
      sub_warm.log_b.resize(rn);
      for (Eigen::Index a = 0; a < rm; ++a) sub_warm.log_a[a] = warm_start->log_a[rows[a]];
      for (Eigen::Index b = 0; b < rn; ++b) sub_warm.log_b[b] = warm_start->log_b[cols[b]];
    }
    core = solve_positive(sub, smu, snu, cfg, warm_start ? &sub_warm : nullptr);
    result.coupling.plan = Matrix::Zero(m, n);
    result.scalings.log_a = Vector::Constant(m, kNegInf);
    result.scalings.log_b = Vector::Constant(n, kNegInf);
    for (Eigen::Index a = 0; a < rm; ++a) {
      result.scalings.log_a[rows[a]] = core.log_a[a];
      for (Eigen::Index b = 0; b < rn; ++b) result.coupling.plan(rows[a], cols[b]) = core.plan(a, b);
    }
    for (Eigen::Index b = 0; b < rn; ++b) result.scalings.log_b[cols[b]] = core.log_b[b];
  }
  result.iterations = core.iterations;
  result.violation = core.violation;
  result.converged = core.converged || core.violation <= cfg.tol;
  result.log_domain = core.log_domain;
  result.violation_trace = std::move(core.trace);
  if (!result.coupling.plan.allFinite()) throw NumericalError("sinkhorn produced a non-finite plan");
  return result;
}

SinkhornResult sinkhorn(const Matrix& cost, const Vector& mu, const Vector& nu, const SinkhornConfig& cfg,
                        const SinkhornScalings* warm_start) {
  cfg.validate();
  require(cost.allFinite(), "cost matrix has non-finite entries");
  return sinkhorn_log_kernel(-cost / cfg.epsilon, mu, nu, cfg, warm_start);
}

}  // namespace robustgw
