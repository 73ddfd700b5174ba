#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robustgw/contamination.hpp"
#include "robustgw/gw.hpp"
#include "robustgw/mmspace.hpp"

namespace robustgw {

enum class TauModeKind { Dynamic, Percentile, Fixed };

struct TauMode {
  TauModeKind kind = TauModeKind::Dynamic;
  /// Percentile level in (0, 100] or the fixed threshold.
  double value = 0.0;

  static TauMode dynamic() { return {}; }
  static TauMode percentile(double q) { return {TauModeKind::Percentile, q}; }
  static TauMode fixed(double tau) { return {TauModeKind::Fixed, tau}; }
};

std::string to_string(const TauMode& mode);
TauMode tau_mode_from_string(const std::string& text);

struct MethodSpec {
  std::string name;
  /// Threshold of a robust penalty is overwritten by the selected tau.
  RobustPenalty penalty = RobustPenalty::squared(2.0);
  std::optional<TauMode> tau_mode;
  ContractionKind contraction = ContractionKind::Auto;
};

struct SweepConfig {
  std::vector<double> levels;
  int repetitions = 1;
  std::vector<MethodSpec> methods;
  std::size_t m = 200;
  std::size_t n = 200;
  /// Regime and adversary; alpha and seed are filled per run.
  ContaminationSpec adversary;
  TauMode tau_mode;
  std::uint64_t base_seed = 0;
  /// Solver settings shared by all methods. Fewer outer iterations than a
  /// standalone solve so a 20-repetition desk-scale sweep fits in minutes.
  GwConfig gw = [] {
    GwConfig g;
    g.outer_iter = 30;
    return g;
  }();
  /// Number of sampled 4-tuples used to estimate J for tau selection.
  std::size_t tau_pairs = 100000;
  /// Zeroes wall_time_ms so repeated sweeps produce identical bytes.
  bool deterministic = false;
  /// Work-pool size; 0 means ROBUSTGW_THREADS or hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

struct ExperimentRun {
  std::string method;
  double alpha = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::optional<double> tau_used;
  double value = 0.0;
  bool converged = false;
  std::int64_t wall_time_ms = 0;
};

/// splitmix64(base ^ fnv1a(method, alpha bits, repetition))
std::uint64_t derive_seed(std::uint64_t base, const std::string& method, double alpha, int repetition);

/// Contaminated source and its distortion statistics for one (alpha, repetition) cell.
/// Identical for every method, so runs at the same cell are paired.
struct SweepInstance {
  MmSpace source;
  std::vector<std::size_t> outliers;
  ThresholdEstimate tau;
  double epsilon = 0.0;
};
SweepInstance prepare_instance(const SweepConfig& cfg, const MmSpace& source, const MmSpace& target, double alpha,
                               int repetition);

std::vector<ExperimentRun> run_sweep(const SweepConfig& cfg, const MmSpace& source, const MmSpace& target);

struct SummaryRow {
  std::string method;
  double alpha = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  bool present = false;
};

/// Per (method, alpha) statistics over converged runs; std uses n - 1.
std::vector<SummaryRow> summarize(std::span<const ExperimentRun> runs);

void write_runs_csv(std::ostream& out, std::span<const ExperimentRun> runs);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
/// Reads runs in the output schema (e.g. externally computed baselines).
std::vector<ExperimentRun> read_runs_csv(std::istream& in);

/// (max - min) of the per-level means divided by a reference value.
double relative_range(std::span<const SummaryRow> rows, const std::string& method, double reference);

}  // namespace robustgw
