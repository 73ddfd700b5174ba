#include "robustgw/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "robustgw/errors.hpp"
#include "robustgw/parallel.hpp"

namespace robustgw {

std::string to_string(const TauMode& mode) {
  std::ostringstream os;
  switch (mode.kind) {
    case TauModeKind::Dynamic:
      return "dynamic";
    case TauModeKind::Percentile:
      os << "p" << mode.value;
      return os.str();
    case TauModeKind::Fixed:
      os << std::setprecision(17) << "fixed:" << mode.value;
      return os.str();
  }
  return "dynamic";
}

TauMode tau_mode_from_string(const std::string& text) {
  if (text == "dynamic" || text == "auto") return TauMode::dynamic();
  try {
    if (text.size() > 1 && text[0] == 'p') return TauMode::percentile(std::stod(text.substr(1)));
    if (text.rfind("percentile:", 0) == 0) return TauMode::percentile(std::stod(text.substr(11)));
    if (text.rfind("fixed:", 0) == 0) return TauMode::fixed(std::stod(text.substr(6)));
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return TauMode::fixed(v);
  } catch (const std::exception&) {
  }
  throw InvalidArgument("unknown tau mode: " + text);
}

namespace {

void validate_tau_mode(const TauMode& mode) {
  if (mode.kind == TauModeKind::Percentile) require(mode.value > 0.0 && mode.value <= 100.0, "percentile must lie in (0, 100]");
  if (mode.kind == TauModeKind::Fixed) require(mode.value >= 0.0, "fixed tau must be >= 0");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < len; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void SweepConfig::validate() const {
  require(repetitions >= 1, "repetitions must be >= 1");
  require(!levels.empty(), "sweep needs at least one contamination level");
  for (double a : levels) require(a >= 0.0 && a < 1.0, "contamination levels must lie in [0, 1)");
  require(!methods.empty(), "sweep needs at least one method");
  for (const auto& m : methods) {
    require(!m.name.empty(), "method names must be non-empty");
    if (m.tau_mode) validate_tau_mode(*m.tau_mode);
  }
  validate_tau_mode(tau_mode);
  require(tau_pairs >= 1, "tau_pairs must be >= 1");
  gw.validate();
  ContaminationSpec probe = adversary;
  probe.alpha = 0.0;
  probe.validate();
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& method, double alpha, int repetition) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, method.data(), method.size());
  const auto bits = std::bit_cast<std::uint64_t>(alpha);
  h = fnv1a(h, &bits, sizeof bits);
  const auto rep = static_cast<std::int64_t>(repetition);
  h = fnv1a(h, &rep, sizeof rep);
  return splitmix64(base ^ h);
}

SweepInstance prepare_instance(const SweepConfig& cfg, const MmSpace& source, const MmSpace& target, double alpha,
                               int repetition) {
  const std::uint64_t data_seed = derive_seed(cfg.base_seed, "__data__", alpha, repetition);
  ContaminationSpec spec = cfg.adversary;
  spec.alpha = alpha;
  spec.seed = data_seed;
  const MetricKind metric = source.metric() == MetricKind::Precomputed ? MetricKind::SquaredEuclidean : source.metric();
  Contaminated c = contaminate(source.points(), spec);
  MmSpace contaminated = build_space(c.points, source.weights(), metric);
  // Sampling for J and epsilon does not vary with the repetition, so clean cells repeat exactly.
  const std::uint64_t sample_seed = derive_seed(cfg.base_seed, "__sample__", alpha, 0);
  const auto j = distortion_samples_product(contaminated, target, cfg.tau_pairs, sample_seed);
  const double eps = cfg.gw.epsilon ? *cfg.gw.epsilon : default_epsilon(contaminated.dist(), target.dist(), sample_seed);
  return SweepInstance{std::move(contaminated), std::move(c.outliers), select_tau(j), eps};
}

std::vector<ExperimentRun> run_sweep(const SweepConfig& cfg, const MmSpace& source, const MmSpace& target) {
  cfg.validate();
  require(source.has_points(), "sweep source needs point coordinates");

  struct Cell {
    double alpha;
    int rep;
  };
  std::vector<Cell> cells;
  for (double a : cfg.levels)
    for (int r = 0; r < cfg.repetitions; ++r) cells.push_back({a, r});

  const std::size_t nm = cfg.methods.size();
  std::vector<ExperimentRun> runs(cells.size() * nm);
  const std::size_t workers = cfg.threads ? cfg.threads : default_thread_count();

  parallel_for(
      cells.size(),
      [&](std::size_t ci) {
        const Cell cell = cells[ci];
        std::optional<SweepInstance> inst;
        try {
          inst = prepare_instance(cfg, source, target, cell.alpha, cell.rep);
        } catch (const std::exception&) {
          // every method of this cell is recorded as failed
        }
        for (std::size_t mi = 0; mi < nm; ++mi) {
          const MethodSpec& method = cfg.methods[mi];
          ExperimentRun& run = runs[mi * cells.size() + ci];
          run.method = method.name;
          run.alpha = cell.alpha;
          run.repetition = cell.rep;
          run.seed = derive_seed(cfg.base_seed, method.name, cell.alpha, cell.rep);
          run.value = std::numeric_limits<double>::quiet_NaN();
          if (!inst) continue;
          const auto start = std::chrono::steady_clock::now();
          try {
            GwConfig gw = cfg.gw;
            gw.seed = run.seed;
            gw.epsilon = inst->epsilon;
            gw.contraction = method.contraction;
            gw.threads = 1;
            gw.penalty = method.penalty;
            if (method.penalty.kind() != PenaltyKind::SquaredP) {
              const TauMode mode = method.tau_mode.value_or(cfg.tau_mode);
              double tau = 0.0;
              switch (mode.kind) {
                case TauModeKind::Dynamic:
                  tau = inst->tau.tau;
                  break;
                case TauModeKind::Percentile: {
                  // p95/p98 are already in the estimate; other levels need the sorted sample.
                  if (mode.value == 95.0) {
                    tau = inst->tau.p95;
                  } else if (mode.value == 98.0) {
                    tau = inst->tau.p98;
                  } else {
                    const std::uint64_t sample_seed = derive_seed(cfg.base_seed, "__sample__", cell.alpha, 0);
                    auto j = distortion_samples_product(inst->source, target, cfg.tau_pairs, sample_seed);
                    std::sort(j.begin(), j.end());
                    tau = sorted_quantile(j, mode.value / 100.0);
                  }
                  break;
                }
                case TauModeKind::Fixed:
                  tau = mode.value;
                  break;
              }
              if (method.penalty.kind() == PenaltyKind::Huber || method.penalty.kind() == PenaltyKind::Truncate) {
                tau = std::max(tau, std::numeric_limits<double>::min());
              }
              gw.penalty = method.penalty.with_tau(tau);
              run.tau_used = tau;
            }
            const GwResult res = egw_solve(inst->source, target, gw);
            run.value = res.value;
            run.converged = std::isfinite(res.value);
          } catch (const std::exception&) {
            run.converged = false;
          }
          const auto stop = std::chrono::steady_clock::now();
          run.wall_time_ms =
              cfg.deterministic ? 0 : std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
        }
      },
      workers);
  return runs;
}

std::vector<SummaryRow> summarize(std::span<const ExperimentRun> runs) {
  require(!runs.empty(), "summarize needs at least one run");
  std::vector<std::string> method_order;
  std::map<std::pair<std::string, double>, std::vector<const ExperimentRun*>> groups;
  for (const auto& r : runs) {
    if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end())
      method_order.push_back(r.method);
    groups[{r.method, r.alpha}].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& method : method_order) {
    for (const auto& [key, members] : groups) {
      if (key.first != method) continue;
      SummaryRow row;
      row.method = method;
      row.alpha = key.second;
      std::vector<double> vals;
      for (const auto* r : members) {
        if (r->converged && std::isfinite(r->value)) {
          vals.push_back(r->value);
        } else {
          ++row.n_excluded;
        }
      }
      row.n_used = vals.size();
      row.present = !vals.empty();
      if (row.present) {
        double sum = 0.0;
        for (double v : vals) sum += v;
        row.mean = sum / static_cast<double>(vals.size());
        if (vals.size() > 1) {
          double ss = 0.0;
          for (double v : vals) ss += (v - row.mean) * (v - row.mean);
          row.std = std::sqrt(ss / static_cast<double>(vals.size() - 1));
        }
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        row.median = n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_runs_csv(std::ostream& out, std::span<const ExperimentRun> runs) {
  out << "method,alpha,repetition,seed,tau_used,value,converged,wall_time_ms\n";
  for (const auto& r : runs) {
    out << r.method << ',' << fmt(r.alpha) << ',' << r.repetition << ',' << r.seed << ','
        << (r.tau_used ? fmt(*r.tau_used) : std::string()) << ',' << fmt(r.value) << ','
        << (r.converged ? "true" : "false") << ',' << r.wall_time_ms << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "method,alpha,mean,std,median,n_used\n";
  for (const auto& r : rows) {
    out << r.method << ',' << fmt(r.alpha) << ',';
    if (r.present) {
      out << fmt(r.mean) << ',' << fmt(r.std) << ',' << fmt(r.median);
    } else {
      out << ",,";
    }
    out << ',' << r.n_used << '\n';
  }
}

std::vector<ExperimentRun> read_runs_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "runs CSV is empty");
  const auto header = split_csv(line);
  const std::vector<std::string> expected{"method", "alpha", "repetition", "seed", "tau_used", "value", "converged",
                                          "wall_time_ms"};
  require(header == expected, "runs CSV header does not match the sweep schema");
  std::vector<ExperimentRun> runs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    require(f.size() == expected.size(), "runs CSV line " + std::to_string(lineno) + " has the wrong field count");
    try {
      ExperimentRun r;
      r.method = f[0];
      r.alpha = std::stod(f[1]);
      r.repetition = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      if (!f[4].empty()) r.tau_used = std::stod(f[4]);
      r.value = f[5] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[5]);
      r.converged = f[6] == "true" || f[6] == "1";
      r.wall_time_ms = std::stoll(f[7]);
      runs.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InvalidArgument("runs CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return runs;
}

double relative_range(std::span<const SummaryRow> rows, const std::string& method, double reference) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    if (r.method != method || !r.present) continue;
    lo = std::min(lo, r.mean);
    hi = std::max(hi, r.mean);
  }
  require(std::isfinite(lo), "no summary rows for method " + method);
  require(reference > 0.0, "relative range needs a positive reference");
  return (hi - lo) / reference;
}

}  // namespace robustgw
