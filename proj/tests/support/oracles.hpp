#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

inline Mat random_points(std::mt19937_64& rng, int n, int d, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat p(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) p(i, k) = g(rng);
  return p;
}

inline Mat euclidean(const Mat& a, const Mat& b) {
  Mat d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

inline Vec random_simplex(std::mt19937_64& rng, int n, double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  Vec w(n);
  for (int i = 0; i < n; ++i) w[i] = u(rng);
  return w / w.sum();
}

/// Random coupling of (mu, nu) by alternating row and column rescaling of a random positive matrix.
inline Mat random_coupling(std::mt19937_64& rng, const Vec& mu, const Vec& nu) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Mat k(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = u(rng);
  for (int it = 0; it < 500; ++it) {
    k = (mu.cwiseQuotient(k.rowwise().sum())).asDiagonal() * k;
    k = k * (nu.cwiseQuotient(k.colwise().sum().transpose())).asDiagonal();
  }
  return k;
}

/// Four nested loops, no tricks.
inline Mat local_cost(const Mat& cx, const Mat& cy, const Mat& plan, const std::function<double(double)>& pen) {
  Mat out = Mat::Zero(cx.rows(), cy.rows());
  for (Eigen::Index i = 0; i < cx.rows(); ++i)
    for (Eigen::Index j = 0; j < cy.rows(); ++j)
      for (Eigen::Index i2 = 0; i2 < cx.rows(); ++i2)
        for (Eigen::Index j2 = 0; j2 < cy.rows(); ++j2) out(i, j) += pen(cx(i, i2) - cy(j, j2)) * plan(i2, j2);
  return out;
}

inline double distortion(const Mat& cx, const Mat& cy, const Mat& plan, const std::function<double(double)>& pen) {
  return local_cost(cx, cy, plan, pen).cwiseProduct(plan).sum();
}

/// min over permutations of (1/n) sum c(i, s(i)); uniform weights only.
inline double assignment_brute(const Mat& c) {
  std::vector<int> perm(c.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (int i = 0; i < static_cast<int>(perm.size()); ++i) v += c(i, perm[i]);
    best = std::min(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(c.rows());
}

/// Dense two-phase tableau simplex with Bland's rule:
/// minimize c.x subject to A_eq x = b_eq, A_ub x <= b_ub, x >= 0.
/// Meant for a few dozen variables.
struct LpResult {
  bool feasible = false;
  double value = 0.0;
  Vec x;
};

inline LpResult lp_minimize(const Vec& c, const Mat& a_eq, const Vec& b_eq, const Mat& a_ub, const Vec& b_ub) {
  const int nv = static_cast<int>(c.size());
  const int ne = static_cast<int>(a_eq.rows()), nu = static_cast<int>(a_ub.rows());
  const int rows = ne + nu;
  // Columns: original vars, slacks for <= rows, artificials for every row, rhs.
  const int ns = nu, na = rows;
  const int cols = nv + ns + na + 1;
  Mat t = Mat::Zero(rows + 1, cols);
  std::vector<int> basis(rows);
  for (int r = 0; r < rows; ++r) {
    double rhs;
    if (r < ne) {
      t.row(r).head(nv) = a_eq.row(r);
      rhs = b_eq[r];
    } else {
      t.row(r).head(nv) = a_ub.row(r - ne);
      t(r, nv + (r - ne)) = 1.0;
      rhs = b_ub[r - ne];
    }
    if (rhs < 0) {
      t.row(r) *= -1.0;
      rhs = -rhs;
    }
    t(r, nv + ns + r) = 1.0;
    t(r, cols - 1) = rhs;
    basis[r] = nv + ns + r;
  }
  auto pivot = [&](int pr, int pc) {
    t.row(pr) /= t(pr, pc);
    for (int r = 0; r <= rows; ++r)
      if (r != pr && t(r, pc) != 0.0) t.row(r) -= t(r, pc) * t.row(pr);
    basis[pr] = pc;
  };
  auto run = [&](int allowed) {
    for (int guard = 0; guard < 100000; ++guard) {
      int pc = -1;
      for (int k = 0; k < allowed; ++k)
        if (t(rows, k) < -1e-12) {
          pc = k;
          break;
        }
      if (pc < 0) return;
      int pr = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows; ++r) {
        if (t(r, pc) > 1e-12) {
          const double ratio = t(r, cols - 1) / t(r, pc);
          if (ratio < best - 1e-14 || (std::fabs(ratio - best) <= 1e-14 && basis[r] < basis[pr])) {
            best = ratio;
            pr = r;
          }
        }
      }
      if (pr < 0) return;  // unbounded; not expected for the test problems
      pivot(pr, pc);
    }
  };
  // Phase one: minimize the sum of artificials.
  t.row(rows).setZero();
  for (int r = 0; r < rows; ++r) t.row(rows) -= t.row(r);
  for (int r = 0; r < rows; ++r) t(rows, nv + ns + r) = 0.0;
  run(nv + ns + na);
  LpResult out;
  if (-t(rows, cols - 1) > 1e-9) return out;
  // Drive remaining artificials out of the basis where possible.
  for (int r = 0; r < rows; ++r) {
    if (basis[r] >= nv + ns) {
      for (int k = 0; k < nv + ns; ++k)
        if (std::fabs(t(r, k)) > 1e-10) {
          pivot(r, k);
          break;
        }
    }
  }
  // Phase two.
  t.row(rows).setZero();
  t.row(rows).head(nv) = c.transpose();
  for (int r = 0; r < rows; ++r)
    if (basis[r] < nv && c[basis[r]] != 0.0) t.row(rows) -= c[basis[r]] * t.row(r);
  for (int r = 0; r < rows; ++r)
    if (basis[r] >= nv + ns) t.row(r).segment(nv + ns, na).setZero(), t(r, basis[r]) = 1.0;
  run(nv + ns);
  out.feasible = true;
  out.x = Vec::Zero(nv);
  for (int r = 0; r < rows; ++r)
    if (basis[r] < nv) out.x[basis[r]] = t(r, cols - 1);
  out.value = c.dot(out.x);
  return out;
}

/// Balanced OT as a dense LP.
inline LpResult ot_lp(const Mat& cost, const Vec& mu, const Vec& nu) {
  const int m = static_cast<int>(cost.rows()), n = static_cast<int>(cost.cols());
  Vec c(m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = cost(i, j);
  Mat a(m + n - 1, m * n);
  a.setZero();
  Vec b(m + n - 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) a(i, i * n + j) = 1.0;
    b[i] = mu[i];
  }
  // The last column constraint is implied by the others.
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i < m; ++i) a(m + j, i * n + j) = 1.0;
    b[m + j] = nu[j];
  }
  return lp_minimize(c, a, b, Mat(0, m * n), Vec(0));
}

/// min <cost, pi> over pi >= 0 with row sums <= mu/(1-e1), column sums <= nu/(1-e2), total mass 1.
inline LpResult capped_ot_lp(const Mat& cost, const Vec& mu, const Vec& nu, double e1, double e2) {
  const int m = static_cast<int>(cost.rows()), n = static_cast<int>(cost.cols());
  Vec c(m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = cost(i, j);
  Mat aeq = Mat::Ones(1, m * n);
  Vec beq = Vec::Ones(1);
  Mat aub = Mat::Zero(m + n, m * n);
  Vec bub(m + n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) aub(i, i * n + j) = 1.0;
    bub[i] = mu[i] / (1.0 - e1);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) aub(m + j, i * n + j) = 1.0;
    bub[m + j] = nu[j] / (1.0 - e2);
  }
  return lp_minimize(c, aeq, beq, aub, bub);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
