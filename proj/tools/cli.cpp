#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "robustgw/contamination.hpp"
#include "robustgw/csv.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/experiments.hpp"
#include "robustgw/gaussian_mixture.hpp"
#include "robustgw/gw.hpp"
#include "robustgw/lrgw.hpp"
#include "robustgw/ot.hpp"
#include "robustgw/serialization.hpp"

namespace robustgw::cli {
namespace {

struct SpaceArgs {
  std::string points;
  std::string dist;
  std::string weights;
};

struct Common {
  SpaceArgs x, y;
  std::string metric = "euclidean";
  std::string out;
  std::string config;
  bool deterministic = false;
};

struct GwArgs {
  std::string penalty;
  double p = 2.0;
  std::string tau = "auto";
  double lambda = std::numeric_limits<double>::infinity();
  std::optional<double> eps;
  int outer = 50;
  int inner = 200;
  double inner_tol = 1e-9;
  double objective_tol = 1e-8;
  std::uint64_t seed = 0;
  std::size_t pairs = 100000;
  std::string contraction = "auto";
  int restarts = 0;
  std::string plan_out;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

MmSpace load_space(const SpaceArgs& a, const std::string& metric, const char* which) {
  std::optional<Vector> w;
  if (!a.weights.empty()) w = read_vector_csv(a.weights);
  if (!a.dist.empty()) return space_from_distances(read_matrix_csv(a.dist), w);
  if (a.points.empty()) throw InvalidArgument(std::string("missing --") + which + " or --" + which + "-dist");
  return build_space(read_matrix_csv(a.points), w, metric_kind_from_string(metric));
}

void add_space_options(CLI::App* sub, Common& c) {
  sub->add_option("--x", c.x.points, "Source points CSV");
  sub->add_option("--y", c.y.points, "Target points CSV");
  sub->add_option("--x-dist", c.x.dist, "Source distance matrix CSV");
  sub->add_option("--y-dist", c.y.dist, "Target distance matrix CSV");
  sub->add_option("--x-weights", c.x.weights, "Source weights CSV");
  sub->add_option("--y-weights", c.y.weights, "Target weights CSV");
  sub->add_option("--metric", c.metric, "euclidean | sqeuclidean | inner")
      ->check(CLI::IsMember({"euclidean", "sqeuclidean", "inner"}));
}

void add_output_options(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Write the result here instead of stdout");
  sub->add_option("--config", c.config, "JSON file of default flag values");
}

void add_gw_options(CLI::App* sub, GwArgs& g, bool with_penalty) {
  if (with_penalty) {
    sub->add_option("--penalty", g.penalty, "squared | tukey | huber | truncate")
        ->check(CLI::IsMember({"squared", "tukey", "huber", "truncate"}));
  }
  sub->add_option("--p", g.p, "Exponent p");
  sub->add_option("--tau", g.tau, "Threshold, or 'auto' for median + 3 MAD of sampled distortions");
  sub->add_option("--eps", g.eps, "Entropic regularization (default: 0.05 * median distortion)");
  sub->add_option("--outer", g.outer, "Outer iterations N1");
  sub->add_option("--inner", g.inner, "Sinkhorn iterations N2");
  sub->add_option("--inner-tol", g.inner_tol, "Sinkhorn marginal tolerance");
  sub->add_option("--objective-tol", g.objective_tol, "Relative objective change to stop");
  sub->add_option("--seed", g.seed, "Seed for sampling");
  sub->add_option("--pairs", g.pairs, "Distortion samples used by --tau auto");
  sub->add_option("--contraction", g.contraction, "auto | naive | factorized | sorted")
      ->check(CLI::IsMember({"auto", "naive", "factorized", "sorted"}));
  sub->add_option("--restarts", g.restarts, "Extra runs from perturbed couplings; the best is kept");
  sub->add_option("--plan-out", g.plan_out, "Write the coupling as CSV");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::string plan_csv(const Matrix& plan) {
  std::ostringstream os;
  write_matrix_csv(os, plan);
  return os.str();
}

double resolve_tau(const std::string& tau, const MmSpace& X, const MmSpace& Y, const GwArgs& g) {
  if (tau == "auto") {
    const auto j = distortion_samples_product(X, Y, g.pairs, g.seed);
    return select_tau(j).tau;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(tau, &used);
    if (used == tau.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("--tau must be a number or 'auto'");
}

GwConfig make_gw_config(const GwArgs& g, RobustPenalty penalty, bool deterministic) {
  GwConfig cfg;
  cfg.penalty = penalty;
  cfg.epsilon = g.eps;
  cfg.outer_iter = g.outer;
  cfg.inner.max_iter = g.inner;
  cfg.inner.tol = g.inner_tol;
  cfg.objective_tol = g.objective_tol;
  cfg.seed = g.seed;
  cfg.restarts = g.restarts;
  cfg.contraction = contraction_kind_from_string(g.contraction);
  cfg.threads = deterministic ? 1 : 0;
  cfg.validate();
  return cfg;
}

// Appends "--key value" for config entries whose flag is absent from args.
void merge_config(std::vector<std::string>& args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  std::string path;
  if (it != args.end() && it + 1 != args.end()) {
    path = *(it + 1);
  } else {
    for (const auto& a : args)
      if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty()) return;
  if (!args.empty() && args.front() == "sweep") return;
  const Json cfg = read_json_file(path);
  if (!cfg.is_object()) throw InvalidArgument(path + ": config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given || key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << value.get<double>();
      args.push_back(flag);
      args.push_back(os.str());
    } else {
      throw InvalidArgument(path + ": unsupported value for " + key);
    }
  }
}

const std::map<std::string, SinkhornDomain> kDomains{{"auto", SinkhornDomain::Auto},
                                                     {"scaling", SinkhornDomain::Scaling},
                                                     {"stabilized", SinkhornDomain::Stabilized},
                                                     {"log", SinkhornDomain::Log}};

Json ot_json(const Matrix& cost, const Vector& mu, const Vector& nu, const std::optional<double>& eps,
             const std::string& domain, const std::string& plan_out) {
  Json result;
  Matrix plan;
  double value = 0.0;
  if (eps) {
    SinkhornConfig cfg;
    cfg.epsilon = *eps;
    cfg.domain = kDomains.at(domain);
    auto r = sinkhorn(cost, mu, nu, cfg);
    value = cost.cwiseProduct(r.coupling.plan).sum();
    result["iterations"] = r.iterations;
    result["violation"] = r.violation;
    result["converged"] = r.converged;
    plan = std::move(r.coupling.plan);
  } else {
    auto r = exact_ot(cost, mu, nu);
    value = r.value;
    result["pivots"] = r.pivots;
    plan = std::move(r.coupling.plan);
  }
  result["method"] = eps ? "sinkhorn" : "exact";
  result["value"] = value;
  if (!plan_out.empty()) write_file_atomic(plan_out, plan_csv(plan));
  return result;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust Gromov-Wasserstein solvers and contamination experiments", "robustgw"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "Sequential reductions and zeroed timings");

  Common c;
  GwArgs g;

  // Solvers sharing the GW option set; the subcommand fixes the default penalty.
  struct GwCommand {
    const char* name;
    const char* help;
    const char* penalty;
  };
  const GwCommand gw_commands[] = {
      {"gw", "Entropic GW (any penalty via --penalty)", "squared"},
      {"tgw", "Tukey GW", "tukey"},
      {"hgw", "Huber GW", "huber"},
      {"lrgw", "GW on truncated distances min{d, lambda}", "squared"},
  };
  for (const auto& cmd : gw_commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_space_options(sub, c);
    add_output_options(sub, c);
    add_gw_options(sub, g, std::string(cmd.name) == "gw" || std::string(cmd.name) == "lrgw");
    if (std::string(cmd.name) == "lrgw") sub->add_option("--lambda", g.lambda, "Truncation level")->required();
    sub->add_flag("--deterministic", deterministic, "Single-threaded contraction");
  }

  auto* lrigw = app.add_subcommand("lrigw", "Inner-product GW upper bound F1 + F2bar");
  add_space_options(lrigw, c);
  add_output_options(lrigw, c);
  double lambda = 1.0;
  int max_iter = 100;
  double tol = 1e-10;
  lrigw->add_option("--lambda", lambda, "Inner-product truncation level")->required();
  lrigw->add_option("--max-iter", max_iter, "Alternation steps");
  lrigw->add_option("--tol", tol, "Objective change to stop");

  auto* mix = app.add_subcommand("mixture-gw", "GW between Gaussian mixtures");
  std::string mix_a, mix_b;
  std::optional<double> robust_eps;
  int samples = 200;
  add_output_options(mix, c);
  add_gw_options(mix, g, false);
  mix->add_option("--a", mix_a, "Mixture JSON")->required()->check(CLI::ExistingFile);
  mix->add_option("--b", mix_b, "Mixture JSON")->required()->check(CLI::ExistingFile);
  mix->add_option("--robust-eps", robust_eps, "Use sampled W^eps on the A side");
  mix->add_option("--samples", samples, "Samples per component for --robust-eps");

  auto* ot = app.add_subcommand("ot", "Exact or entropic optimal transport");
  add_space_options(ot, c);
  add_output_options(ot, c);
  std::string cost_path, plan_out;
  std::optional<double> sinkhorn_eps;
  double ot_p = 1.0;
  double ot_tau = std::numeric_limits<double>::infinity();
  ot->add_option("--cost", cost_path, "Cost matrix CSV (instead of points)");
  ot->add_option("--p", ot_p, "Cost exponent for point inputs");
  ot->add_option("--tau", ot_tau, "Tukey cap for point inputs");
  ot->add_option("--sinkhorn-eps", sinkhorn_eps, "Use Sinkhorn with this epsilon");
  std::string ot_domain = "auto";
  ot->add_option("--domain", ot_domain, "Sinkhorn domain: auto | scaling | stabilized | log")
      ->check(CLI::IsMember({"auto", "scaling", "stabilized", "log"}));
  ot->add_option("--plan-out", plan_out, "Write the plan as CSV");

  auto* rw = app.add_subcommand("robust-w", "Robust Wasserstein over eps-Huber balls");
  add_space_options(rw, c);
  add_output_options(rw, c);
  double rw_p = 1.0, rw_eps = 0.0;
  std::optional<double> rw_eps2;
  rw->add_option("--p", rw_p, "Exponent p");
  rw->add_option("--eps", rw_eps, "Radius eps in [0, 1)")->required();
  rw->add_option("--eps2", rw_eps2, "Target-side radius (default eps)");

  auto* levy = app.add_subcommand("levy", "Truncated Levy-Prokhorov distance");
  add_space_options(levy, c);
  add_output_options(levy, c);
  double levy_lambda = 1.0;
  std::optional<double> levy_tol;
  levy->add_option("--lambda", levy_lambda, "Truncation level")->required();
  levy->add_option("--tol", levy_tol, "Bisection tolerance (default 1e-4 * lambda)");

  auto* st = app.add_subcommand("select-tau", "median + 3 MAD threshold from sampled distortions");
  add_space_options(st, c);
  add_output_options(st, c);
  std::size_t pairs = 100000;
  std::uint64_t seed = 0;
  st->add_option("--pairs", pairs, "Number of sampled index 4-tuples");
  st->add_option("--seed", seed, "Sampling seed");

  auto* sweep = app.add_subcommand("sweep", "Contamination sweep");
  std::string sweep_config, summary_out, json_out, baseline;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> base_seed;
  std::optional<int> repetitions;
  sweep->add_option("--config", sweep_config, "Sweep manifest JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", c.out, "Runs CSV");
  sweep->add_option("--summary-out", summary_out, "Summary CSV");
  sweep->add_option("--json-out", json_out, "Runs and summary as JSON");
  sweep->add_option("--baseline", baseline, "External runs CSV merged into the summary")->check(CLI::ExistingFile);
  sweep->add_option("--threads", threads, "Work-pool size");
  sweep->add_option("--base-seed", base_seed, "Override the manifest seed");
  sweep->add_option("--repetitions", repetitions, "Override the manifest repetitions");
  sweep->add_flag("--deterministic", deterministic, "Zero wall times for byte-identical output");

  auto* shapes = app.add_subcommand("shapes", "Generate a synthetic point cloud");
  std::string shape = "heart";
  std::size_t shape_n = 200;
  double rotate = 0.0;
  shapes->add_option("--shape", shape, "heart | circle | moons")->check(CLI::IsMember({"heart", "circle", "moons"}));
  shapes->add_option("--n", shape_n, "Number of points");
  shapes->add_option("--seed", seed, "Seed");
  shapes->add_option("--rotate", rotate, "Rotation angle in radians");
  shapes->add_option("--out", c.out, "Output CSV");

  try {
    merge_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    Json result;
    if (app.got_subcommand("sweep")) {
      const Json manifest = read_json_file(sweep_config);
      SweepConfig cfg = sweep_config_from_json(manifest);
      if (deterministic) cfg.deterministic = true;
      if (threads) cfg.threads = *threads;
      if (base_seed) cfg.base_seed = *base_seed;
      if (repetitions) cfg.repetitions = *repetitions;
      cfg.validate();
      const auto [source, target] = sweep_spaces_from_json(manifest, cfg);
      const auto runs = run_sweep(cfg, source, target);
      std::vector<ExperimentRun> all = runs;
      if (!baseline.empty()) {
        std::ifstream in(baseline);
        const auto ext = read_runs_csv(in);
        all.insert(all.end(), ext.begin(), ext.end());
      }
      const auto summary = summarize(all);
      std::ostringstream runs_csv, summary_csv;
      write_runs_csv(runs_csv, runs);
      write_summary_csv(summary_csv, summary);
      emit(runs_csv.str(), c.out, out);
      if (!summary_out.empty()) write_file_atomic(summary_out, summary_csv.str());
      if (!json_out.empty()) {
        const Json j{{"runs", runs_to_json(runs)}, {"summary", summary_to_json(summary)}};
        write_file_atomic(json_out, j.dump(2) + "\n");
      }
      return 0;
    }
    if (app.got_subcommand("shapes")) {
      Matrix pts = shape == "heart" ? heart_shape(shape_n, seed) : shape == "circle" ? circle_shape(shape_n, seed)
                                                                                     : two_moons(shape_n, seed);
      if (rotate != 0.0) pts = rotate2d(pts, rotate);
      emit(plan_csv(pts), c.out, out);
      return 0;
    }
    if (app.got_subcommand("mixture-gw")) {
      const GaussianMixture a = mixture_from_json(read_json_file(mix_a));
      const GaussianMixture b = mixture_from_json(read_json_file(mix_b));
      const GwConfig cfg = make_gw_config(g, RobustPenalty::squared(2.0), deterministic);
      GwResult r;
      if (robust_eps) {
        RobustMixtureOptions opts;
        opts.samples = samples;
        opts.seed = g.seed;
        r = mixture_gw_robust(a, b, *robust_eps, cfg, opts);
      } else {
        r = mixture_gw(a, b, cfg);
      }
      result = to_json(r);
      result["method"] = robust_eps ? "mixture-gw-robust" : "mixture-gw";
      result["plan"] = matrix_to_json(r.plan.plan);
      emit(result.dump(2) + "\n", c.out, out);
      return 0;
    }

    if (app.got_subcommand("ot") && !cost_path.empty()) {
      const Matrix cost = read_matrix_csv(cost_path);
      auto weights = [](const std::string& path, Eigen::Index n) {
        return path.empty() ? Vector(Vector::Constant(n, 1.0 / static_cast<double>(n))) : read_vector_csv(path);
      };
      const MmSpace X = space_from_distances(Matrix::Zero(cost.rows(), cost.rows()), weights(c.x.weights, cost.rows()));
      const MmSpace Y = space_from_distances(Matrix::Zero(cost.cols(), cost.cols()), weights(c.y.weights, cost.cols()));
      result = ot_json(cost, X.weights(), Y.weights(), sinkhorn_eps, ot_domain, plan_out);
      emit(result.dump(2) + "\n", c.out, out);
      return 0;
    }

    const MmSpace X = load_space(c.x, c.metric, "x");
    const MmSpace Y = load_space(c.y, c.metric, "y");

    for (const auto& cmd : gw_commands) {
      if (!app.got_subcommand(cmd.name)) continue;
      const std::string name = cmd.name;
      const PenaltyKind kind = penalty_kind_from_string(g.penalty.empty() ? cmd.penalty : g.penalty);
      RobustPenalty pen = RobustPenalty::squared(g.p);
      if (kind != PenaltyKind::SquaredP) {
        const double tau = resolve_tau(g.tau, X, Y, g);
        pen = kind == PenaltyKind::Tukey ? RobustPenalty::tukey(g.p, tau)
              : kind == PenaltyKind::Huber ? RobustPenalty::huber(tau)
                                           : RobustPenalty::truncate(tau);
      }
      const GwConfig cfg = make_gw_config(g, pen, deterministic);
      const GwResult r = name == "lrgw" ? lrgw_solve(X, Y, g.lambda, cfg) : egw_solve(X, Y, cfg);
      result = to_json(r);
      if (name == "lrgw") {
        result["method"] = "lrgw";
        result["params"]["lambda"] = g.lambda;
      }
      result["distance"] = report_distance(pen, r.value);
      if (!g.plan_out.empty()) write_file_atomic(g.plan_out, plan_csv(r.plan.plan));
      emit(result.dump(2) + "\n", c.out, out);
      return 0;
    }
    if (app.got_subcommand("lrigw")) {
      LrigwOptions opts;
      opts.max_iter = max_iter;
      opts.tol = tol;
      result = to_json(lrigw_bound(X, Y, lambda, opts));
    } else if (app.got_subcommand("ot")) {
      const RobustPenalty pen = RobustPenalty::tukey(ot_p, ot_tau);
      const Matrix cost = cross_distances(X, Y).unaryExpr([&](double d) { return pen(d); });
      result = ot_json(cost, X.weights(), Y.weights(), sinkhorn_eps, ot_domain, plan_out);
    } else if (app.got_subcommand("robust-w")) {
      const Matrix cost = cross_distances(X, Y).unaryExpr([&](double d) { return pow_abs(d, rw_p); });
      const auto r = robust_ot_from_cost(cost, X.weights(), Y.weights(), rw_eps, rw_eps2, rw_p);
      result = Json{{"method", "robust-w"},
                    {"p", rw_p},
                    {"eps", rw_eps},
                    {"eps2", rw_eps2.value_or(rw_eps)},
                    {"value", r.value},
                    {"cost", r.cost},
                    {"dual_objective", r.dual.objective}};
    } else if (app.got_subcommand("levy")) {
      result = Json{{"method", "levy"}, {"lambda", levy_lambda}, {"value", levy_prokhorov_trunc(X, Y, levy_lambda, levy_tol)}};
    } else if (app.got_subcommand("select-tau")) {
      result = to_json(select_tau(distortion_samples_product(X, Y, pairs, seed)));
    }
    emit(result.dump(2) + "\n", c.out, out);
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace robustgw::cli
