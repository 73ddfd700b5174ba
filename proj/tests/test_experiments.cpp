#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "robustgw/contamination.hpp"
#include "robustgw/errors.hpp"
#include "robustgw/experiments.hpp"

using namespace robustgw;

namespace {

ExperimentRun make_run(const std::string& method, double alpha, int rep, double value, bool converged = true) {
  ExperimentRun r;
  r.method = method;
  r.alpha = alpha;
  r.repetition = rep;
  r.value = value;
  r.converged = converged;
  return r;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.levels = {0.0, 0.1};
  cfg.repetitions = 2;
  cfg.m = cfg.n = 30;
  cfg.base_seed = 5;
  cfg.tau_pairs = 5000;
  cfg.gw.outer_iter = 10;
  cfg.deterministic = true;
  cfg.methods = {{"gw", RobustPenalty::squared(2), std::nullopt, ContractionKind::Auto},
                 {"tgw", RobustPenalty::tukey(2, 1.0), TauMode::percentile(95), ContractionKind::SortedMasks},
                 {"hgw", RobustPenalty::huber(1.0), TauMode::dynamic(), ContractionKind::SortedMasks}};
  return cfg;
}

std::pair<MmSpace, MmSpace> shapes(std::size_t n) {
  return {build_space(heart_shape(n, 1), std::nullopt, MetricKind::SquaredEuclidean),
          build_space(rotate2d(heart_shape(n, 2), 0.8), std::nullopt, MetricKind::SquaredEuclidean)};
}

const SummaryRow* find(const std::vector<SummaryRow>& rows, const std::string& m, double a) {
  for (const auto& r : rows)
    if (r.method == m && r.alpha == a) return &r;
  return nullptr;
}

}  // namespace

TEST(Summarize, KnownValues) {
  std::vector<ExperimentRun> runs{make_run("gw", 0.1, 0, 1), make_run("gw", 0.1, 1, 2), make_run("gw", 0.1, 2, 3),
                                  make_run("gw", 0.2, 0, 7)};
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 2u);
  const auto* a = find(rows, "gw", 0.1);
  ASSERT_NE(a, nullptr);
  EXPECT_DOUBLE_EQ(a->mean, 2.0);
  EXPECT_DOUBLE_EQ(a->std, 1.0);
  EXPECT_DOUBLE_EQ(a->median, 2.0);
  EXPECT_EQ(a->n_used, 3u);
  const auto* b = find(rows, "gw", 0.2);
  EXPECT_DOUBLE_EQ(b->mean, 7.0);
  EXPECT_DOUBLE_EQ(b->std, 0.0);
}

TEST(Summarize, ExcludesFailedRunsAndMarksEmptyCells) {
  std::vector<ExperimentRun> runs{make_run("gw", 0.1, 0, 1), make_run("gw", 0.1, 1, 100, false),
                                  make_run("tgw", 0.1, 0, 5, false)};
  const auto rows = summarize(runs);
  const auto* a = find(rows, "gw", 0.1);
  EXPECT_EQ(a->n_used, 1u);
  EXPECT_EQ(a->n_excluded, 1u);
  EXPECT_DOUBLE_EQ(a->mean, 1.0);
  const auto* b = find(rows, "tgw", 0.1);
  ASSERT_NE(b, nullptr);
  EXPECT_FALSE(b->present);
  EXPECT_TRUE(a->present);
}

TEST(RelativeRange, MaxMinusMinOverReference) {
  std::vector<ExperimentRun> runs{make_run("gw", 0.1, 0, 1), make_run("gw", 0.2, 0, 4), make_run("gw", 0.3, 0, 2)};
  const auto rows = summarize(runs);
  EXPECT_DOUBLE_EQ(relative_range(rows, "gw", 2.0), 1.5);
}

TEST(DeriveSeed, StableAndSensitive) {
  const auto s = derive_seed(1, "gw", 0.1, 3);
  EXPECT_EQ(s, derive_seed(1, "gw", 0.1, 3));
  std::set<std::uint64_t> all{s, derive_seed(2, "gw", 0.1, 3), derive_seed(1, "tgw", 0.1, 3),
                              derive_seed(1, "gw", 0.2, 3), derive_seed(1, "gw", 0.1, 4)};
  EXPECT_EQ(all.size(), 5u);
}

TEST(Sweep, RowCountsAndSchema) {
  auto cfg = small_sweep();
  auto [src, tgt] = shapes(30);
  const auto runs = run_sweep(cfg, src, tgt);
  EXPECT_EQ(runs.size(), 3u * 2u * 2u);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.converged) << r.method;
    EXPECT_GE(r.value, 0.0);
    EXPECT_EQ(r.wall_time_ms, 0);
    EXPECT_EQ(r.seed, derive_seed(cfg.base_seed, r.method, r.alpha, r.repetition));
    EXPECT_EQ(r.tau_used.has_value(), r.method != "gw");
  }
  EXPECT_EQ(summarize(runs).size(), 3u * 2u);

  std::ostringstream csv;
  write_runs_csv(csv, runs);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "method,alpha,repetition,seed,tau_used,value,converged,wall_time_ms");
  std::istringstream in(text);
  const auto back = read_runs_csv(in);
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    EXPECT_EQ(back[k].method, runs[k].method);
    EXPECT_EQ(back[k].seed, runs[k].seed);
    EXPECT_EQ(back[k].value, runs[k].value);
    EXPECT_EQ(back[k].tau_used, runs[k].tau_used);
  }

  std::ostringstream sum;
  const auto rows = summarize(runs);
  write_summary_csv(sum, rows);
  EXPECT_EQ(sum.str().substr(0, sum.str().find('\n')), "method,alpha,mean,std,median,n_used");
}

TEST(Sweep, ByteIdenticalAcrossRunsAndThreads) {
  auto cfg = small_sweep();
  auto [src, tgt] = shapes(30);
  std::ostringstream a, b, c;
  write_runs_csv(a, run_sweep(cfg, src, tgt));
  write_runs_csv(b, run_sweep(cfg, src, tgt));
  cfg.threads = 3;
  write_runs_csv(c, run_sweep(cfg, src, tgt));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
}

TEST(Sweep, CleanLevelHasNoVariance) {
  auto cfg = small_sweep();
  cfg.levels = {0.0};
  cfg.repetitions = 3;
  auto [src, tgt] = shapes(30);
  const auto runs = run_sweep(cfg, src, tgt);
  for (const auto& row : summarize(runs)) EXPECT_EQ(row.std, 0.0) << row.method;
  const auto inst = prepare_instance(cfg, src, tgt, 0.0, 0);
  GwConfig gw = cfg.gw;
  gw.epsilon = inst.epsilon;
  EXPECT_EQ(find(summarize(runs), "gw", 0.0)->mean, egw_solve(src, tgt, gw).value);
}

TEST(Sweep, MethodsSeeTheSameContaminatedData) {
  auto cfg = small_sweep();
  auto [src, tgt] = shapes(30);
  const auto a = prepare_instance(cfg, src, tgt, 0.1, 1);
  cfg.methods.pop_back();
  const auto b = prepare_instance(cfg, src, tgt, 0.1, 1);
  EXPECT_EQ(a.source.dist(), b.source.dist());
  EXPECT_EQ(a.outliers.size(), 3u);
  EXPECT_EQ(a.tau.tau, b.tau.tau);
}

TEST(Sweep, TauModesAreApplied) {
  auto cfg = small_sweep();
  cfg.levels = {0.1};
  cfg.repetitions = 1;
  cfg.methods.push_back({"tgw-fixed", RobustPenalty::tukey(2, 1.0), TauMode::fixed(0.25), ContractionKind::Auto});
  cfg.methods.push_back({"tgw-p50", RobustPenalty::tukey(2, 1.0), TauMode::percentile(50), ContractionKind::Auto});
  auto [src, tgt] = shapes(30);
  const auto inst = prepare_instance(cfg, src, tgt, 0.1, 0);
  for (const auto& r : run_sweep(cfg, src, tgt)) {
    if (r.method == "tgw") EXPECT_EQ(*r.tau_used, inst.tau.p95);
    if (r.method == "hgw") EXPECT_EQ(*r.tau_used, inst.tau.tau);
    if (r.method == "tgw-fixed") EXPECT_EQ(*r.tau_used, 0.25);
    if (r.method == "tgw-p50") EXPECT_NEAR(*r.tau_used, inst.tau.median, 1e-12);
  }
}

TEST(Sweep, FailedRunsAreRecorded) {
  auto cfg = small_sweep();
  cfg.levels = {0.1};
  cfg.repetitions = 1;
  cfg.gw.epsilon = 1e-300;
  auto [src, tgt] = shapes(30);
  const auto runs = run_sweep(cfg, src, tgt);
  EXPECT_EQ(runs.size(), 3u);
}

TEST(Sweep, ValidatesConfig) {
  auto cfg = small_sweep();
  cfg.repetitions = 0;
  auto [src, tgt] = shapes(30);
  EXPECT_THROW(run_sweep(cfg, src, tgt), InvalidArgument);
  cfg = small_sweep();
  cfg.levels = {1.0};
  EXPECT_THROW(run_sweep(cfg, src, tgt), InvalidArgument);
}

TEST(TauModeNames, RoundTrip) {
  for (const auto& m : {TauMode::dynamic(), TauMode::percentile(95), TauMode::percentile(98), TauMode::fixed(0.5)}) {
    const auto back = tau_mode_from_string(to_string(m));
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.value, m.value);
  }
  EXPECT_THROW(tau_mode_from_string("p"), InvalidArgument);
}
