#include "robustgw/serialization.hpp"

#include <cmath>
#include <limits>

#include "robustgw/csv.hpp"
#include "robustgw/errors.hpp"

namespace robustgw {

Json penalty_params(const RobustPenalty& penalty) {
  Json p = Json::object();
  switch (penalty.kind()) {
    case PenaltyKind::SquaredP:
      p["p"] = penalty.p();
      break;
    case PenaltyKind::Tukey:
      p["p"] = penalty.p();
      p["tau"] = std::isfinite(penalty.tau()) ? Json(penalty.tau()) : Json("inf");
      break;
    case PenaltyKind::Huber:
      p["tau"] = penalty.tau();
      break;
    case PenaltyKind::Truncate:
      p["lambda"] = penalty.tau();
      break;
  }
  return p;
}

Json to_json(const GwResult& r) {
  Json params = penalty_params(r.penalty);
  params["epsilon"] = r.epsilon;
  return Json{{"method", r.method},
              {"penalty", r.penalty.name()},
              {"params", params},
              {"value", r.value},
              {"value_with_root", r.value_with_root},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"trace", r.trace}};
}

Json to_json(const ThresholdEstimate& t) {
  return Json{{"tau", t.tau},     {"median", t.median}, {"mad", t.mad},
              {"p95", t.p95},     {"p98", t.p98},       {"sample_size", t.sample_size}};
}

Json to_json(const LrigwResult& r) {
  return Json{{"f1", r.f1},
              {"f2_bar", r.f2_bar},
              {"total", r.total},
              {"lambda", r.state.lambda},
              {"m_bound", r.state.m_bound},
              {"A", matrix_to_json(r.state.A)},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"trace", r.trace}};
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), "expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 1;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) {
      require(cols == 1, "ragged matrix");
      m(i, 0) = j[i].get<double>();
      continue;
    }
    require(j[i].size() == cols, "ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Vector vector_from_json(const Json& j) {
  require(j.is_array(), "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Json to_json(const GaussianMixture& mix) {
  Json comps = Json::array();
  for (const auto& c : mix.components) {
    comps.push_back(Json{{"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                         {"cov", matrix_to_json(c.cov)}});
  }
  return Json{{"weights", std::vector<double>(mix.weights.data(), mix.weights.data() + mix.weights.size())},
              {"components", comps}};
}

GaussianMixture mixture_from_json(const Json& j) {
  try {
    GaussianMixture mix;
    mix.weights = vector_from_json(j.at("weights"));
    for (const auto& c : j.at("components")) {
      GaussianComponent g;
      g.mean = vector_from_json(c.at("mean"));
      g.cov = matrix_from_json(c.at("cov"));
      mix.components.push_back(std::move(g));
    }
    mix.validate();
    return mix;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed mixture JSON: ") + e.what());
  }
}

Json runs_to_json(std::span<const ExperimentRun> runs) {
  Json out = Json::array();
  for (const auto& r : runs) {
    out.push_back(Json{{"method", r.method},
                       {"alpha", r.alpha},
                       {"repetition", r.repetition},
                       {"seed", r.seed},
                       {"tau_used", r.tau_used ? Json(*r.tau_used) : Json(nullptr)},
                       {"value", std::isfinite(r.value) ? Json(r.value) : Json(nullptr)},
                       {"converged", r.converged},
                       {"wall_time_ms", r.wall_time_ms}});
  }
  return out;
}

Json summary_to_json(std::span<const SummaryRow> rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json row{{"method", r.method}, {"alpha", r.alpha}, {"n_used", r.n_used}, {"n_excluded", r.n_excluded}};
    if (r.present) {
      row["mean"] = r.mean;
      row["std"] = r.std;
      row["median"] = r.median;
    } else {
      row["mean"] = row["std"] = row["median"] = nullptr;
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

RobustPenalty penalty_from_json(const Json& m) {
  const PenaltyKind kind = penalty_kind_from_string(m.value("penalty", std::string("squared")));
  const double p = m.value("p", 2.0);
  switch (kind) {
    case PenaltyKind::SquaredP:
      return RobustPenalty::squared(p);
    case PenaltyKind::Tukey:
      return RobustPenalty::tukey(p, m.value("tau", std::numeric_limits<double>::infinity()));
    case PenaltyKind::Huber:
      return RobustPenalty::huber(m.value("tau", 1.0));
    case PenaltyKind::Truncate:
      return RobustPenalty::truncate(m.value("lambda", 1.0));
  }
  return RobustPenalty::squared(p);
}

TauMode tau_mode_from_json(const Json& j) {
  if (j.is_string()) return tau_mode_from_string(j.get<std::string>());
  if (j.is_number()) return TauMode::fixed(j.get<double>());
  if (j.is_object() && j.contains("percentile")) return TauMode::percentile(j["percentile"].get<double>());
  if (j.is_object() && j.contains("fixed")) return TauMode::fixed(j["fixed"].get<double>());
  throw InvalidArgument("unrecognised tau_mode");
}

Matrix shape_points(const Json& j, std::size_t count) {
  if (j.contains("csv")) return read_matrix_csv(j["csv"].get<std::string>());
  const std::string shape = j.value("shape", std::string("heart"));
  const auto seed = j.value("seed", std::uint64_t{0});
  const std::size_t n = j.value("n", count);
  Matrix pts;
  if (shape == "heart") {
    pts = heart_shape(n, seed);
  } else if (shape == "circle") {
    pts = circle_shape(n, seed);
  } else if (shape == "moons") {
    pts = two_moons(n, seed);
  } else {
    throw InvalidArgument("unknown shape: " + shape);
  }
  if (j.contains("rotate")) pts = rotate2d(pts, j["rotate"].get<double>());
  return pts;
}

}  // namespace

SweepConfig sweep_config_from_json(const Json& j) {
  try {
    SweepConfig cfg;
    cfg.levels = j.value("levels", std::vector<double>{0.02, 0.04, 0.08, 0.1, 0.16});
    cfg.repetitions = j.value("repetitions", 20);
    cfg.m = j.value("m", std::size_t{200});
    cfg.n = j.value("n", std::size_t{200});
    cfg.base_seed = j.value("base_seed", std::uint64_t{0});
    cfg.deterministic = j.value("deterministic", false);
    cfg.threads = j.value("threads", std::size_t{0});
    cfg.tau_pairs = j.value("tau_pairs", std::size_t{100000});
    if (j.contains("tau_mode")) cfg.tau_mode = tau_mode_from_json(j["tau_mode"]);
    if (j.contains("adversary")) {
      const Json& a = j["adversary"];
      cfg.adversary.regime = regime_from_string(a.value("regime", std::string("replace_fraction")));
      cfg.adversary.adversary.kind = adversary_from_string(a.value("kind", std::string("cauchy")));
      if (a.contains("points")) cfg.adversary.adversary.points = matrix_from_json(a["points"]);
    }
    if (j.contains("methods")) {
      for (const auto& m : j["methods"]) {
        MethodSpec spec;
        spec.name = m.at("name").get<std::string>();
        spec.penalty = penalty_from_json(m);
        if (m.contains("tau_mode")) spec.tau_mode = tau_mode_from_json(m["tau_mode"]);
        if (m.contains("contraction")) spec.contraction = contraction_kind_from_string(m["contraction"].get<std::string>());
        cfg.methods.push_back(std::move(spec));
      }
    } else {
      cfg.methods = {{"gw", RobustPenalty::squared(2.0), std::nullopt, ContractionKind::Auto},
                     {"tgw", RobustPenalty::tukey(2.0, 1.0), TauMode::percentile(95), ContractionKind::SortedMasks},
                     {"hgw", RobustPenalty::huber(1.0), TauMode::dynamic(), ContractionKind::SortedMasks}};
    }
    if (j.contains("gw")) {
      const Json& g = j["gw"];
      if (g.contains("epsilon") && !g["epsilon"].is_null()) cfg.gw.epsilon = g["epsilon"].get<double>();
      cfg.gw.outer_iter = g.value("outer_iter", cfg.gw.outer_iter);
      cfg.gw.inner.max_iter = g.value("inner_iter", cfg.gw.inner.max_iter);
      cfg.gw.inner.tol = g.value("inner_tol", cfg.gw.inner.tol);
      cfg.gw.objective_tol = g.value("objective_tol", cfg.gw.objective_tol);
    }
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed sweep config: ") + e.what());
  }
}

std::pair<MmSpace, MmSpace> sweep_spaces_from_json(const Json& j, const SweepConfig& cfg) {
  try {
    const Json src = j.value("source", Json{{"shape", "heart"}, {"seed", 1}});
    const Json tgt = j.value("target", Json{{"shape", "heart"}, {"seed", 2}, {"rotate", 0.7853981633974483}});
    return {build_space(shape_points(src, cfg.m), std::nullopt, MetricKind::SquaredEuclidean),
            build_space(shape_points(tgt, cfg.n), std::nullopt, MetricKind::SquaredEuclidean)};
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed sweep spaces: ") + e.what());
  }
}

}  // namespace robustgw
