#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "robustgw/contamination.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/experiments.hpp"
#include "robustgw/gaussian_mixture.hpp"
#include "robustgw/gw.hpp"
#include "robustgw/lrgw.hpp"
#include "robustgw/ot.hpp"
#include "robustgw/serialization.hpp"

namespace py = pybind11;
using namespace robustgw;

namespace {

MmSpace make_space(const Matrix& x, const std::optional<Vector>& w, const std::string& metric, bool is_dist) {
  if (is_dist) return space_from_distances(x, w);
  return build_space(x, w, metric_kind_from_string(metric));
}

RobustPenalty make_penalty(const std::string& kind, double p, std::optional<double> tau, const MmSpace& X,
                           const MmSpace& Y, std::size_t pairs, std::uint64_t seed) {
  const PenaltyKind k = penalty_kind_from_string(kind);
  if (k == PenaltyKind::SquaredP) return RobustPenalty::squared(p);
  const double t = tau ? *tau : select_tau(distortion_samples_product(X, Y, pairs, seed)).tau;
  if (k == PenaltyKind::Tukey) return RobustPenalty::tukey(p, t);
  if (k == PenaltyKind::Huber) return RobustPenalty::huber(t);
  return RobustPenalty::truncate(t);
}

py::dict gw_dict(const GwResult& r) {
  py::dict d;
  d["method"] = r.method;
  d["penalty"] = r.penalty.name();
  d["tau"] = r.penalty.tau();
  d["value"] = r.value;
  d["value_with_root"] = r.value_with_root;
  d["distance"] = report_distance(r.penalty, r.value);
  d["plan"] = r.plan.plan;
  d["trace"] = r.trace;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["epsilon"] = r.epsilon;
  return d;
}

py::dict tau_dict(const ThresholdEstimate& t) {
  py::dict d;
  d["tau"] = t.tau;
  d["median"] = t.median;
  d["mad"] = t.mad;
  d["p95"] = t.p95;
  d["p98"] = t.p98;
  d["sample_size"] = t.sample_size;
  return d;
}

GaussianMixture make_mixture(const Vector& weights, const std::vector<Vector>& means, const std::vector<Matrix>& covs) {
  if (means.size() != covs.size()) throw InvalidArgument("means and covs differ in length");
  GaussianMixture mix;
  mix.weights = weights;
  for (std::size_t k = 0; k < means.size(); ++k) mix.components.push_back({means[k], covs[k]});
  return mix;
}

}  // namespace

PYBIND11_MODULE(_robustgw, m) {
  m.doc() = "Robust Gromov-Wasserstein solvers";
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def(
      "gw",
      [](const Matrix& x, const Matrix& y, const std::string& penalty, double p, std::optional<double> tau,
         std::optional<double> eps, int outer_iter, int restarts, std::uint64_t seed, std::optional<Vector> x_weights,
         std::optional<Vector> y_weights, const std::string& metric, bool distances, std::size_t pairs) {
        const MmSpace X = make_space(x, x_weights, metric, distances);
        const MmSpace Y = make_space(y, y_weights, metric, distances);
        GwConfig cfg;
        cfg.penalty = make_penalty(penalty, p, tau, X, Y, pairs, seed);
        cfg.epsilon = eps;
        cfg.outer_iter = outer_iter;
        cfg.restarts = restarts;
        cfg.seed = seed;
        GwResult r;
        {
          py::gil_scoped_release release;
          r = egw_solve(X, Y, cfg);
        }
        return gw_dict(r);
      },
      py::arg("x"), py::arg("y"), py::arg("penalty") = "squared", py::arg("p") = 2.0, py::arg("tau") = py::none(),
      py::arg("eps") = py::none(), py::arg("outer_iter") = 50, py::arg("restarts") = 0, py::arg("seed") = 0,
      py::arg("x_weights") = py::none(), py::arg("y_weights") = py::none(), py::arg("metric") = "euclidean",
      py::arg("distances") = false, py::arg("pairs") = 100000,
      "Entropic GW between point clouds (or distance matrices with distances=True). tau=None selects median + 3 MAD.");

  m.def(
      "lrgw",
      [](const Matrix& x, const Matrix& y, double lam, std::optional<double> eps, int outer_iter, std::uint64_t seed) {
        GwConfig cfg;
        cfg.epsilon = eps;
        cfg.outer_iter = outer_iter;
        cfg.seed = seed;
        return gw_dict(lrgw_solve(build_space(x), build_space(y), lam, cfg));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("eps") = py::none(), py::arg("outer_iter") = 50,
      py::arg("seed") = 0, "GW on distances truncated at lam.");

  m.def(
      "lrigw",
      [](const Matrix& x, const Matrix& y, double lam) {
        const auto r = lrigw_bound(build_space(x), build_space(y), lam);
        py::dict d;
        d["f1"] = r.f1;
        d["f2_bar"] = r.f2_bar;
        d["total"] = r.total;
        d["A"] = r.state.A;
        d["plan"] = r.state.plan.plan;
        d["trace"] = r.trace;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), "Inner-product GW upper bound for nonnegative points.");

  m.def(
      "exact_ot",
      [](const Matrix& cost, const Vector& mu, const Vector& nu) {
        const auto r = exact_ot(cost, mu, nu);
        return py::make_tuple(r.value, r.coupling.plan);
      },
      py::arg("cost"), py::arg("mu"), py::arg("nu"), "Transportation simplex; returns (value, plan).");

  m.def(
      "sinkhorn",
      [](const Matrix& cost, const Vector& mu, const Vector& nu, double eps, const std::string& domain) {
        SinkhornConfig cfg;
        cfg.epsilon = eps;
        if (domain == "scaling") cfg.domain = SinkhornDomain::Scaling;
        else if (domain == "stabilized") cfg.domain = SinkhornDomain::Stabilized;
        else if (domain == "log") cfg.domain = SinkhornDomain::Log;
        else if (domain != "auto") throw InvalidArgument("unknown sinkhorn domain: " + domain);
        const auto r = sinkhorn(cost, mu, nu, cfg);
        return py::make_tuple(cost.cwiseProduct(r.coupling.plan).sum(), r.coupling.plan);
      },
      py::arg("cost"), py::arg("mu"), py::arg("nu"), py::arg("eps"), py::arg("domain") = "auto", "Entropic OT; returns (transport cost, plan).");

  m.def(
      "robust_w",
      [](const Matrix& x, const Matrix& y, double p, double eps, std::optional<double> eps2) {
        return robust_w_eps(build_space(x), build_space(y), p, eps, eps2);
      },
      py::arg("x"), py::arg("y"), py::arg("p"), py::arg("eps"), py::arg("eps2") = py::none(),
      "Robust W_p over eps-Huber balls.");

  m.def(
      "levy",
      [](const Matrix& x, const Matrix& y, double lam) { return levy_prokhorov_trunc(build_space(x), build_space(y), lam); },
      py::arg("x"), py::arg("y"), py::arg("lam"), "Truncated Levy-Prokhorov distance.");

  m.def(
      "select_tau", [](const std::vector<double>& samples) { return tau_dict(select_tau(samples)); }, py::arg("samples"));
  m.def(
      "distortion_samples",
      [](const Matrix& x, const Matrix& y, std::size_t pairs, std::uint64_t seed, const std::string& metric) {
        const auto kind = metric_kind_from_string(metric);
        return distortion_samples_product(build_space(x, std::nullopt, kind), build_space(y, std::nullopt, kind), pairs,
                                          seed);
      },
      py::arg("x"), py::arg("y"), py::arg("pairs") = 100000, py::arg("seed") = 0, py::arg("metric") = "euclidean");

  m.def(
      "w2_gaussian",
      [](const Vector& m0, const Matrix& s0, const Vector& m1, const Matrix& s1) {
        return w2_gaussian({m0, s0}, {m1, s1});
      },
      py::arg("m0"), py::arg("s0"), py::arg("m1"), py::arg("s1"));
  m.def(
      "mixture_gw",
      [](const Vector& wa, const std::vector<Vector>& ma, const std::vector<Matrix>& sa, const Vector& wb,
         const std::vector<Vector>& mb, const std::vector<Matrix>& sb, std::optional<double> eps, int outer_iter,
         int restarts) {
        GwConfig cfg;
        cfg.epsilon = eps;
        cfg.outer_iter = outer_iter;
        cfg.restarts = restarts;
        return gw_dict(mixture_gw(make_mixture(wa, ma, sa), make_mixture(wb, mb, sb), cfg));
      },
      py::arg("weights_a"), py::arg("means_a"), py::arg("covs_a"), py::arg("weights_b"), py::arg("means_b"),
      py::arg("covs_b"), py::arg("eps") = py::none(), py::arg("outer_iter") = 50, py::arg("restarts") = 0);

  m.def(
      "contaminate",
      [](const Matrix& points, double alpha, std::uint64_t seed, const std::string& adversary,
         const std::string& regime) {
        ContaminationSpec spec;
        spec.alpha = alpha;
        spec.seed = seed;
        spec.adversary.kind = adversary_from_string(adversary);
        spec.regime = regime_from_string(regime);
        const auto r = contaminate(points, spec);
        return py::make_tuple(r.points, r.outliers);
      },
      py::arg("points"), py::arg("alpha"), py::arg("seed") = 0, py::arg("adversary") = "cauchy",
      py::arg("regime") = "replace_fraction", "Returns (points, outlier indices).");

  m.def("heart_shape", &heart_shape, py::arg("n"), py::arg("seed") = 0, py::arg("jitter") = 0.01);
  m.def("rotate2d", &rotate2d, py::arg("points"), py::arg("angle"));

  m.def(
      "run_sweep",
      [](const std::string& manifest) {
        const Json j = Json::parse(manifest);
        const SweepConfig cfg = sweep_config_from_json(j);
        const auto [source, target] = sweep_spaces_from_json(j, cfg);
        std::vector<ExperimentRun> runs;
        {
          py::gil_scoped_release release;
          runs = run_sweep(cfg, source, target);
        }
        const Json out{{"runs", runs_to_json(runs)}, {"summary", summary_to_json(summarize(runs))}};
        return out.dump();
      },
      py::arg("manifest"), "Runs a sweep from a JSON manifest string; returns JSON with runs and summary.");
}
