#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "robustgw/errors.hpp"
#include "robustgw/gw.hpp"
#include "robustgw/parallel.hpp"

namespace robustgw {

std::string to_string(ContractionKind kind) {
  switch (kind) {
    case ContractionKind::Auto:
      return "auto";
    case ContractionKind::Naive:
      return "naive";
    case ContractionKind::Factorized:
      return "factorized";
    case ContractionKind::SortedMasks:
      return "sorted";
  }
  return "unknown";
}

ContractionKind contraction_kind_from_string(const std::string& name) {
  if (name == "auto") return ContractionKind::Auto;
  if (name == "naive") return ContractionKind::Naive;
  if (name == "factorized") return ContractionKind::Factorized;
  if (name == "sorted") return ContractionKind::SortedMasks;
  throw InvalidArgument("unknown contraction: " + name);
}

namespace {

// k x^2 + s x + c on one interval of x = a - b.
struct Piece {
  double k = 0.0, s = 0.0, c = 0.0;
};

struct PiecewiseQuadratic {
  std::vector<double> breaks;  // increasing
  std::vector<Piece> pieces;   // breaks.size() + 1 pieces
};

std::optional<PiecewiseQuadratic> piecewise_form(const RobustPenalty& pen) {
  const double t = pen.tau();
  const bool finite = std::isfinite(t);
  const int p = pen.integer_p();
  switch (pen.kind()) {
    case PenaltyKind::Huber:
      return PiecewiseQuadratic{{-t, t}, {{0.0, -1.0, -0.5 * t}, {0.5 / t, 0.0, 0.0}, {0.0, 1.0, -0.5 * t}}};
    case PenaltyKind::SquaredP:
    case PenaltyKind::Tukey:
      if (p == 2 && finite) return PiecewiseQuadratic{{-t, t}, {{0, 0, t * t}, {1, 0, 0}, {0, 0, t * t}}};
      if (p == 2) return PiecewiseQuadratic{{}, {{1, 0, 0}}};
      if (p == 1 && finite) return PiecewiseQuadratic{{-t, 0.0, t}, {{0, 0, t}, {0, -1, 0}, {0, 1, 0}, {0, 0, t}}};
      if (p == 1) return PiecewiseQuadratic{{0.0}, {{0, -1, 0}, {0, 1, 0}}};
      return std::nullopt;
    case PenaltyKind::Truncate:
      return PiecewiseQuadratic{{-t, 0.0, t}, {{0, 0, t}, {0, -1, 0}, {0, 1, 0}, {0, 0, t}}};
  }
  return std::nullopt;
}

template <class F>
void naive_row(const Matrix& cx, const Matrix& cy, const Matrix& plan, F pen, Matrix& out, Eigen::Index i) {
  const Eigen::Index m = cx.rows(), n = cy.rows();
  double* orow = out.data() + i * n;
  std::fill(orow, orow + n, 0.0);
  for (Eigen::Index i2 = 0; i2 < m; ++i2) {
    const double a = cx(i, i2);
    const double* prow = plan.data() + i2 * n;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double* crow = cy.data() + j * n;
      double acc = 0.0;
      for (Eigen::Index j2 = 0; j2 < n; ++j2) acc += pen(a - crow[j2]) * prow[j2];
      orow[j] += acc;
    }
  }
}

void naive_row_dispatch(const Matrix& cx, const Matrix& cy, const Matrix& plan, const RobustPenalty& pen,
                        Matrix& out, Eigen::Index i) {
  const double t = pen.tau();
  const int p = pen.integer_p();
  switch (pen.kind()) {
    case PenaltyKind::SquaredP:
      if (p == 2) return naive_row(cx, cy, plan, [](double d) { return d * d; }, out, i);
      if (p == 1) return naive_row(cx, cy, plan, [](double d) { return std::fabs(d); }, out, i);
      break;
    case PenaltyKind::Tukey:
      if (p == 2) {
        const double t2 = t * t;
        return naive_row(cx, cy, plan, [t2](double d) { return std::min(d * d, t2); }, out, i);
      }
      if (p == 1) return naive_row(cx, cy, plan, [t](double d) { return std::min(std::fabs(d), t); }, out, i);
      break;
    case PenaltyKind::Huber: {
      const double inv = 0.5 / t, half = 0.5 * t;
      return naive_row(
          cx, cy, plan,
          [t, inv, half](double d) {
            const double a = std::fabs(d);
            return a <= t ? a * a * inv : a - half;
          },
          out, i);
    }
    case PenaltyKind::Truncate:
      return naive_row(cx, cy, plan, [t](double d) { return std::min(std::fabs(d), t); }, out, i);
  }
  naive_row(cx, cy, plan, [&pen](double d) { return pen(d); }, out, i);
}

// Exact evaluation for piecewise-quadratic penalties. For a fixed row i the
// values a = CX_ii' are sorted once; prefix sums of pi_i'j' a^e (e = 0, 1, 2)
// per column j' turn every piece into a difference of two prefix entries.
// The prefix position of every (j, j') and breakpoint comes from one merge of
// the sorted a against all CY entries, sorted once per contraction.
class SortedMaskContraction {
 public:
  SortedMaskContraction(const Matrix& cx, const Matrix& cy, const Matrix& plan, PiecewiseQuadratic form)
      : cx_(cx), plan_t_(plan.transpose()), form_(std::move(form)), m_(cx.rows()), n_(cy.rows()), cyt_(cy.transpose()) {
    const auto total = static_cast<std::size_t>(n_ * n_);
    std::vector<std::uint32_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::uint32_t{0});
    const double* flat = cyt_.data();
    std::stable_sort(idx.begin(), idx.end(), [flat](std::uint32_t x, std::uint32_t y) { return flat[x] < flat[y]; });
    sorted_.resize(total);
    const auto stride = static_cast<std::uint32_t>(n_);
    const auto seg = static_cast<std::uint32_t>((m_ + 1) * 3);
    for (std::size_t k = 0; k < total; ++k) sorted_[k] = {flat[idx[k]], idx[k], (idx[k] / stride) * seg};
  }

  void row(Eigen::Index i, Matrix& out) const {
    const Eigen::Index m = m_, n = n_;
    const std::size_t nb = form_.breaks.size();
    const auto total = static_cast<std::size_t>(n * n);
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return cx_(i, a) < cx_(i, b); });
    // Sentinel at the end so pointer advances need no bounds check.
    std::vector<double> sv(m + 1);
    for (Eigen::Index k = 0; k < m; ++k) sv[k] = cx_(i, order[k]);
    sv[m] = std::numeric_limits<double>::infinity();
    // Interleaved prefix sums: pre[(j2 * (m + 1) + k) * 3 + e] = sum_{k' < k} pi(order[k'], j2) sv[k']^e
    thread_local std::vector<double> pre;
    pre.resize(static_cast<std::size_t>(n * (m + 1) * 3));
    for (Eigen::Index j2 = 0; j2 < n; ++j2) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      double* q = pre.data() + j2 * (m + 1) * 3;
      q[0] = q[1] = q[2] = 0.0;
      const double* prow = plan_t_.data() + j2 * m;
      for (Eigen::Index k = 0; k < m; ++k) {
        const double w = prow[order[k]];
        const double a = sv[k];
        s0 += w;
        s1 += w * a;
        s2 += w * a * a;
        q[3 * (k + 1)] = s0;
        q[3 * (k + 1) + 1] = s1;
        q[3 * (k + 1) + 2] = s2;
      }
    }
    // pos[r * n^2 + j2 * n + j] = #{k : sv[k] < CY(j, j2) + breaks[r]}, scaled to a prefix offset.
    thread_local std::vector<std::uint32_t> pos;
    pos.resize(nb * total);
    for (std::size_t r = 0; r < nb; ++r) {
      const double br = form_.breaks[r];
      std::uint32_t* pr = pos.data() + r * total;
      Eigen::Index p = 0;
      for (const auto& e : sorted_) {
        const double edge = e.value + br;
        while (sv[p] < edge) ++p;
        pr[e.at] = e.offset + static_cast<std::uint32_t>(3 * p);
      }
    }
    // Sum over pieces of alpha_q . (P[ptr_{q+1}] - P[ptr_q]) rewritten as the last
    // piece against the totals plus one jump term per breakpoint.
    const Piece& last = form_.pieces[nb];
    std::vector<Piece> jump(nb);
    for (std::size_t q = 0; q < nb; ++q) {
      jump[q] = {form_.pieces[q].k - form_.pieces[q + 1].k, form_.pieces[q].s - form_.pieces[q + 1].s,
                 form_.pieces[q].c - form_.pieces[q + 1].c};
    }
    double* orow = out.data() + i * n;
    std::fill(orow, orow + n, 0.0);
    const double* base = pre.data();
    for (Eigen::Index j2 = 0; j2 < n; ++j2) {
      const double* q = base + j2 * (m + 1) * 3;
      const double t0 = q[3 * m], t1 = q[3 * m + 1], t2 = q[3 * m + 2];
      const double* brow = cyt_.data() + j2 * n;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double b = brow[j];
        orow[j] += (last.k * b * b - last.s * b + last.c) * t0 + (last.s - 2.0 * last.k * b) * t1 + last.k * t2;
      }
      for (std::size_t r = 0; r < nb; ++r) {
        const Piece d = jump[r];
        const std::uint32_t* pr = pos.data() + r * total + j2 * n;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double b = brow[j];
          const double* at = base + pr[j];
          orow[j] += (d.k * b * b - d.s * b + d.c) * at[0] + (d.s - 2.0 * d.k * b) * at[1] + d.k * at[2];
        }
      }
    }
  }

 private:
  const Matrix& cx_;
  Matrix plan_t_;
  PiecewiseQuadratic form_;
  Eigen::Index m_, n_;
  // cyt_(j2, j) = CY(j, j2), so a column of CY is contiguous.
  Matrix cyt_;
  // All entries of cyt_ in increasing order with their flat index and the
  // offset of their column's prefix block.
  struct Entry {
    double value;
    std::uint32_t at, offset;
  };
  std::vector<Entry> sorted_;
};

void check_shapes(const Matrix& cx, const Matrix& cy, const Matrix& plan) {
  require(cx.rows() == cx.cols() && cy.rows() == cy.cols(), "distance matrices must be square");
  require(plan.rows() == cx.rows() && plan.cols() == cy.rows(), "plan shape does not match the spaces");
}

}  // namespace

bool supports_sorted_masks(const RobustPenalty& penalty) { return piecewise_form(penalty).has_value(); }

Matrix local_cost(const Matrix& cx, const Matrix& cy, const Matrix& plan, const RobustPenalty& penalty,
                  ContractionKind kind, std::size_t threads) {
  check_shapes(cx, cy, plan);
  const bool squared2 = penalty.kind() == PenaltyKind::SquaredP && penalty.integer_p() == 2;
  if (kind == ContractionKind::Auto) {
    if (squared2) {
      kind = ContractionKind::Factorized;
    } else if (penalty.kind() == PenaltyKind::Huber) {
      kind = ContractionKind::SortedMasks;
    } else {
      kind = ContractionKind::Naive;
    }
  }
  const Eigen::Index m = cx.rows(), n = cy.rows();
  Matrix out(m, n);
  switch (kind) {
    case ContractionKind::Factorized: {
      require(squared2, "factorized contraction needs the squared p=2 penalty");
      const Vector r = plan.rowwise().sum();
      const Vector c = plan.colwise().sum().transpose();
      const Vector fx = cx.cwiseProduct(cx) * r;
      const Vector fy = cy.cwiseProduct(cy) * c;
      out.noalias() = -2.0 * (cx * plan * cy.transpose());
      out.colwise() += fx;
      out.rowwise() += fy.transpose();
      return out;
    }
    case ContractionKind::SortedMasks: {
      auto form = piecewise_form(penalty);
      require(form.has_value(), "sorted contraction supports Huber, Truncate and p in {1, 2} only");
      const SortedMaskContraction engine(cx, cy, plan, std::move(*form));
      parallel_for(static_cast<std::size_t>(m), [&](std::size_t i) { engine.row(static_cast<Eigen::Index>(i), out); },
                   threads);
      return out;
    }
    case ContractionKind::Naive:
    case ContractionKind::Auto:
      parallel_for(
          static_cast<std::size_t>(m),
          [&](std::size_t i) { naive_row_dispatch(cx, cy, plan, penalty, out, static_cast<Eigen::Index>(i)); },
          threads);
      return out;
  }
  return out;
}

double distortion_cost(const Matrix& cx, const Matrix& cy, const Matrix& plan, const RobustPenalty& penalty) {
  return local_cost(cx, cy, plan, penalty, ContractionKind::Naive).cwiseProduct(plan).sum();
}

namespace {
void check_plan_marginals(const MmSpace& X, const MmSpace& Y, const CouplingMatrix& plan) {
  require(static_cast<std::size_t>(plan.plan.rows()) == X.size() &&
              static_cast<std::size_t>(plan.plan.cols()) == Y.size(),
          "plan shape does not match the spaces");
  const double row_err = (plan.plan.rowwise().sum() - X.weights()).cwiseAbs().maxCoeff();
  const double col_err = (plan.plan.colwise().sum().transpose() - Y.weights()).cwiseAbs().maxCoeff();
  require(row_err <= 1e-6 && col_err <= 1e-6, "plan marginals do not match the space weights");
}
}  // namespace

double distortion_cost(const MmSpace& X, const MmSpace& Y, const CouplingMatrix& plan, const RobustPenalty& penalty) {
  check_plan_marginals(X, Y, plan);
  return distortion_cost(X.dist(), Y.dist(), plan.plan, penalty);
}

double huber_cost_decomposed(const MmSpace& X, const MmSpace& Y, const CouplingMatrix& plan, double tau) {
  check_plan_marginals(X, Y, plan);
  const RobustPenalty pen = RobustPenalty::huber(tau);
  const double masked =
      local_cost(X.dist(), Y.dist(), plan.plan, pen, ContractionKind::SortedMasks).cwiseProduct(plan.plan).sum();
  const double naive = distortion_cost(X.dist(), Y.dist(), plan.plan, pen);
  if (std::fabs(masked - naive) > 1e-9 * std::max(1.0, std::fabs(naive))) {
    throw std::logic_error("huber_cost_decomposed: masked factorization disagrees with the naive contraction");
  }
  return masked;
}

}  // namespace robustgw
