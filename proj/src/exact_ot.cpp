#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "robustgw/errors.hpp"
#include "robustgw/ot.hpp"

namespace robustgw {

double CouplingMatrix::marginal_violation() const {
  return (plan.rowwise().sum() - row_marginal).lpNorm<1>() + (plan.colwise().sum().transpose() - col_marginal).lpNorm<1>();
}

namespace {

// Transportation simplex on a dense cost. The basis is a spanning tree on the
// bipartite graph rows + columns; cells are indexed i * n + j.
class TransportSimplex {
 public:
  TransportSimplex(const Matrix& cost, std::vector<double> supply, std::vector<double> demand, int streak)
      : c_(cost),
        m_(static_cast<int>(cost.rows())),
        n_(static_cast<int>(cost.cols())),
        a_(std::move(supply)),
        b_(std::move(demand)),
        streak_limit_(streak),
        x_(static_cast<std::size_t>(m_) * n_, 0.0),
        basic_(static_cast<std::size_t>(m_) * n_, 0),
        row_cells_(m_),
        col_cells_(n_),
        u_(m_),
        v_(n_),
        seen_(m_ + n_),
        parent_cell_(m_ + n_),
        parent_node_(m_ + n_) {
    const double cmax = cost.cwiseAbs().maxCoeff();
    rc_tol_ = 1e-12 * std::max(1.0, cmax);
  }

  void north_west_corner() {
    std::vector<double> ra = a_, rb = b_;
    int i = 0, j = 0;
    for (;;) {
      const double q = std::min(ra[i], rb[j]);
      add_basic(i, j, q);
      ra[i] -= q;
      rb[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        // On a tie the next cell (i+1, j) enters with zero flow, keeping m+n-1 cells.
        ++i;
      } else {
        ++j;
      }
    }
  }

  int solve(int max_pivots) {
    int pivots = 0;
    int degenerate_run = 0;
    for (;;) {
      compute_potentials();
      const bool bland = degenerate_run >= streak_limit_;
      int ei = -1, ej = -1;
      double best = -rc_tol_;
      for (int i = 0; i < m_ && !(bland && ei >= 0); ++i) {
        const double* crow = c_.data() + static_cast<std::ptrdiff_t>(i) * n_;
        const char* brow = basic_.data() + static_cast<std::ptrdiff_t>(i) * n_;
        for (int j = 0; j < n_; ++j) {
          if (brow[j]) continue;
          const double rc = crow[j] - u_[i] - v_[j];
          if (rc < best) {
            ei = i;
            ej = j;
            if (bland) break;
            best = rc;
          }
        }
      }
      if (ei < 0) return pivots;
      if (++pivots > max_pivots) throw NumericalError("transportation simplex hit its pivot limit");
      const double theta = pivot(ei, ej);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
  }

  double value() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      for (int cell : row_cells_[i]) s += c_(i, cell % n_) * x_[cell];
    return s;
  }

  Matrix plan() const {
    Matrix p = Matrix::Zero(m_, n_);
    for (int i = 0; i < m_; ++i)
      for (int cell : row_cells_[i]) p(i, cell % n_) = std::max(0.0, x_[cell]);
    return p;
  }

  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

 private:
  void add_basic(int i, int j, double flow) {
    const int cell = i * n_ + j;
    basic_[cell] = 1;
    x_[cell] = flow;
    row_cells_[i].push_back(cell);
    col_cells_[j].push_back(cell);
  }

  void remove_basic(int cell) {
    basic_[cell] = 0;
    x_[cell] = 0.0;
    auto drop = [cell](std::vector<int>& v) {
      auto it = std::find(v.begin(), v.end(), cell);
      *it = v.back();
      v.pop_back();
    };
    drop(row_cells_[cell / n_]);
    drop(col_cells_[cell % n_]);
  }

  // BFS over the basis tree from `root`; fills parent links. Nodes: rows 0..m-1, columns m..m+n-1.
  template <class Visit>
  void walk_tree(int root, Visit&& visit) {
    std::fill(seen_.begin(), seen_.end(), 0);
    std::deque<int> queue{root};
    seen_[root] = 1;
    parent_cell_[root] = -1;
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      const auto& cells = node < m_ ? row_cells_[node] : col_cells_[node - m_];
      for (int cell : cells) {
        const int other = node < m_ ? m_ + cell % n_ : cell / n_;
        if (seen_[other]) continue;
        seen_[other] = 1;
        parent_cell_[other] = cell;
        parent_node_[other] = node;
        visit(node, other, cell);
        queue.push_back(other);
      }
    }
  }

  void compute_potentials() {
    u_[0] = 0.0;
    walk_tree(0, [&](int from, int to, int cell) {
      const double c = c_(cell / n_, cell % n_);
      if (from < m_) {
        v_[to - m_] = c - u_[from];
      } else {
        u_[to] = c - v_[from - m_];
      }
    });
    for (int k = 0; k < m_ + n_; ++k)
      if (!seen_[k]) throw NumericalError("transportation simplex basis is not a spanning tree");
  }

  // Brings (ei, ej) into the basis and returns the step length.
  double pivot(int ei, int ej) {
    walk_tree(ei, [](int, int, int) {});
    // Path from column ej back to row ei; cells alternate -, +, -, ... starting next to ej.
    std::vector<int> path;
    for (int node = m_ + ej; node != ei; node = parent_node_[node]) path.push_back(parent_cell_[node]);
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const int cell = path[k];
      if (x_[cell] < theta || (x_[cell] == theta && cell < leaving)) {
        theta = x_[cell];
        leaving = cell;
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t k = 0; k < path.size(); ++k) {
      double& flow = x_[path[k]];
      flow += (k % 2 == 0) ? -theta : theta;
      if (flow < 0.0) flow = 0.0;
    }
    remove_basic(leaving);
    add_basic(ei, ej, theta);
    return theta;
  }

  const Matrix& c_;
  int m_, n_;
  std::vector<double> a_, b_;
  int streak_limit_;
  double rc_tol_ = 0.0;
  std::vector<double> x_;
  std::vector<char> basic_;
  std::vector<std::vector<int>> row_cells_, col_cells_;
  std::vector<double> u_, v_;
  std::vector<char> seen_;
  std::vector<int> parent_cell_, parent_node_;
};

}  // namespace

ExactOtResult exact_ot(const Matrix& cost, const Vector& mu, const Vector& nu, const ExactOtOptions& opts) {
  const auto m = cost.rows(), n = cost.cols();
  require(m >= 1 && n >= 1, "cost matrix must be non-empty");
  require(mu.size() == m && nu.size() == n, "marginals do not match the cost shape");
  require(static_cast<std::size_t>(m) * static_cast<std::size_t>(n) <= opts.max_entries,
          "exact solver limit exceeded: m*n = " + std::to_string(m * n) + " > " + std::to_string(opts.max_entries));
  require(cost.allFinite(), "cost matrix has non-finite entries");
  require(mu.allFinite() && nu.allFinite(), "marginals must be finite");
  require((mu.array() >= 0.0).all() && (nu.array() >= 0.0).all(), "marginals must be nonnegative");
  const double sa = mu.sum(), sb = nu.sum();
  require(sa > 0.0, "marginals must have positive mass");
  require(std::fabs(sa - sb) <= 1e-9 * std::max(1.0, sa), "marginals must have equal mass");

  std::vector<double> a(mu.data(), mu.data() + m);
  std::vector<double> b(nu.data(), nu.data() + n);
  for (auto& x : b) x *= sa / sb;

  TransportSimplex simplex(cost, a, b, opts.degenerate_streak);
  simplex.north_west_corner();
  const auto cells = static_cast<int>(std::min<long long>(static_cast<long long>(m) * n, 1'000'000));
  ExactOtResult out;
  out.pivots = simplex.solve(std::max(10000, 50 * cells));
  out.value = simplex.value();
  out.coupling.plan = simplex.plan();
  out.coupling.row_marginal = mu;
  out.coupling.col_marginal = nu;
  out.u = Eigen::Map<const Vector>(simplex.u().data(), m);
  out.v = Eigen::Map<const Vector>(simplex.v().data(), n);
  return out;
}

}  // namespace robustgw
