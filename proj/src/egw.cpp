#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "robustgw/errors.hpp"
#include "robustgw/gw.hpp"

namespace robustgw {

void GwConfig::validate() const {
  require(outer_iter >= 1, "outer_iter must be >= 1");
  if (epsilon) require(*epsilon > 0.0 && std::isfinite(*epsilon), "epsilon must be > 0");
  require(objective_tol >= 0.0, "objective_tol must be >= 0");
  require(restarts >= 0, "restarts must be >= 0");
  require(init_noise >= 0.0, "init_noise must be >= 0");
  SinkhornConfig probe = inner;
  probe.epsilon = 1.0;
  probe.validate();
}

double default_epsilon(const Matrix& cx, const Matrix& cy, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(cx.rows()), n = static_cast<std::size_t>(cy.rows());
  constexpr std::size_t kSamples = 20000;
  std::vector<double> j;
  if (m * m * n * n <= kSamples) {
    j.reserve(m * m * n * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t i2 = 0; i2 < m; ++i2)
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) j.push_back(std::fabs(cx(i, i2) - cy(a, b)));
  } else {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> px(0, m - 1), py(0, n - 1);
    j.resize(kSamples);
    for (auto& v : j) {
      const auto i = px(rng), i2 = px(rng), a = py(rng), b = py(rng);
      v = std::fabs(cx(i, i2) - cy(a, b));
    }
  }
  const auto mid = j.begin() + static_cast<std::ptrdiff_t>(j.size() / 2);
  std::nth_element(j.begin(), mid, j.end());
  double scale = *mid;
  if (!(scale > 0.0)) {
    double sum = 0.0;
    for (double v : j) sum += v;
    scale = sum / static_cast<double>(j.size());
  }
  if (!(scale > 0.0)) scale = 1.0;
  return 0.05 * scale;
}

double report_distance(const RobustPenalty& penalty, double cost) {
  return 0.5 * std::pow(std::max(0.0, cost), 1.0 / penalty.root_exponent());
}

namespace {

// Plan entries below this are flushed to zero so later passes avoid subnormals.
constexpr double kNegligibleMass = 1e-280;

std::string method_name(const RobustPenalty& pen) {
  switch (pen.kind()) {
    case PenaltyKind::SquaredP:
      return "gw";
    case PenaltyKind::Tukey:
      return "tgw";
    case PenaltyKind::Huber:
      return "hgw";
    case PenaltyKind::Truncate:
      return "lrgw";
  }
  return "gw";
}

std::string format_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t k = 0; k < trace.size(); ++k) os << (k ? ", " : "") << trace[k];
  return os.str();
}

Matrix perturbed_plan(const Vector& mu, const Vector& nu, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix logK(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < logK.rows(); ++i)
    for (Eigen::Index j = 0; j < logK.cols(); ++j) logK(i, j) = noise * gauss(rng);
  SinkhornConfig cfg{1.0, 2000, 1e-12, SinkhornDomain::Stabilized, 10};
  return sinkhorn_log_kernel(logK, mu, nu, cfg).coupling.plan;
}

GwResult run_from(const Matrix& cx, const Vector& mu, const Matrix& cy, const Vector& nu, const GwConfig& cfg,
                  double eps, Matrix pi) {
  GwResult res;
  res.method = method_name(cfg.penalty);
  res.penalty = cfg.penalty;
  res.epsilon = eps;
  SinkhornConfig inner = cfg.inner;
  inner.epsilon = eps;

  auto evaluate = [&](const Matrix& plan, Matrix& L) {
    L = local_cost(cx, cy, plan, cfg.penalty, cfg.contraction, cfg.threads);
    const double v = L.cwiseProduct(plan).sum();
    if (!std::isfinite(v)) {
      throw NumericalError("entropic GW objective became non-finite; trace: [" + format_trace(res.trace) + "]");
    }
    res.trace.push_back(v);
    return v;
  };

  Matrix L;
  double value = evaluate(pi, L);
  // The scalings of one proximal step predict those of the next.
  std::optional<SinkhornScalings> warm;
  for (int k = 0; k < cfg.outer_iter; ++k) {
    Matrix logK = -L / eps;
    logK.array() += pi.array().log();
    auto step = sinkhorn_log_kernel(logK, mu, nu, inner, warm ? &*warm : nullptr);
    pi = std::move(step.coupling.plan);
    pi = (pi.array() < kNegligibleMass).select(0.0, pi);
    if (step.scalings.log_a.allFinite() && step.scalings.log_b.allFinite()) {
      warm = std::move(step.scalings);
    } else {
      warm.reset();
    }
    ++res.iterations;
    const double next = evaluate(pi, L);
    const bool settled = std::fabs(next - value) <= cfg.objective_tol * std::max(std::fabs(next), std::fabs(value)) + 1e-15;
    value = next;
    if (settled) {
      res.converged = true;
      break;
    }
  }
  // The last inner solve may stop short of the marginals; finish with a KL projection of the plan.
  CouplingMatrix check{pi, mu, nu};
  if (check.marginal_violation() > inner.tol) {
    SinkhornConfig polish = inner;
    polish.max_iter = 10 * inner.max_iter;
    Matrix logpi = pi.array().log().matrix();
    pi = sinkhorn_log_kernel(logpi, mu, nu, polish).coupling.plan;
    value = evaluate(pi, L);
  }
  res.value = std::max(0.0, value);
  res.value_with_root = std::pow(res.value, 1.0 / cfg.penalty.root_exponent());
  res.plan.plan = std::move(pi);
  res.plan.row_marginal = mu;
  res.plan.col_marginal = nu;
  return res;
}

}  // namespace

GwResult egw_solve(const Matrix& cx, const Vector& mu, const Matrix& cy, const Vector& nu, const GwConfig& cfg) {
  cfg.validate();
  require(cx.rows() == cx.cols() && cy.rows() == cy.cols(), "distance matrices must be square");
  require(mu.size() == cx.rows() && nu.size() == cy.rows(), "weights do not match the distance matrices");
  require(cx.allFinite() && cy.allFinite(), "distance matrices must be finite");
  require((mu.array() > 0.0).all() && (nu.array() > 0.0).all(), "entropic GW needs strictly positive weights");
  const double eps = cfg.epsilon ? *cfg.epsilon : default_epsilon(cx, cy, cfg.seed);

  Matrix start = cfg.init == PlanInit::Product ? Matrix(mu * nu.transpose())
                                               : perturbed_plan(mu, nu, cfg.init_noise, cfg.seed);
  GwResult best = run_from(cx, mu, cy, nu, cfg, eps, std::move(start));
  for (int r = 1; r <= cfg.restarts; ++r) {
    const double noise = cfg.init_noise > 0.0 ? cfg.init_noise : 1.0;
    GwResult cand = run_from(cx, mu, cy, nu, cfg, eps, perturbed_plan(mu, nu, noise, cfg.seed + 0x632be5abULL * r));
    if (cand.value < best.value) best = std::move(cand);
  }
  return best;
}

GwResult egw_solve(const MmSpace& X, const MmSpace& Y, const GwConfig& cfg) {
  return egw_solve(X.dist(), X.weights(), Y.dist(), Y.weights(), cfg);
}

double gw_distance(const MmSpace& X, const MmSpace& Y, const GwConfig& cfg) {
  return report_distance(cfg.penalty, egw_solve(X, Y, cfg).value);
}

}  // namespace robustgw
