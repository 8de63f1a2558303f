// Copyright 2026 The evsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evsched/simplex.hpp"

#include <stdexcept>

namespace evsched {
namespace {

// Tableau rows 0..m-1 are constraints, row m is the reduced-cost row of the
// current objective (minimization form), last column is the right-hand side.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<int> basis, double tol)
      : t_(std::move(t)), basis_(std::move(basis)), tol_(tol) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int rhs() const { return static_cast<int>(t_.cols()) - 1; }

  // Returns false when unbounded. `allowed` limits the entering columns.
  bool optimize(int allowed, int& pivots) {
    while (true) {
      int enter = -1;
      for (int j = 0; j < allowed; ++j) {
        if (t_(rows(), j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < rows(); ++i) {
        if (t_(i, enter) > tol_) {
          const double ratio = t_(i, rhs()) / t_(i, enter);
          if (leave < 0 || ratio < best - tol_ ||
              (ratio <= best + tol_ && basis_[static_cast<std::size_t>(i)] <
                                           basis_[static_cast<std::size_t>(leave)])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i <= rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  Eigen::MatrixXd& data() { return t_; }
  std::vector<int>& basis() { return basis_; }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  double tol_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tol) {
  const int m = static_cast<int>(lp.a.rows());
  const int n = static_cast<int>(lp.a.cols());
  if (lp.b.size() != m || static_cast<int>(lp.sense.size()) != m || lp.c.size() != n) {
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  }
  // Normalize to b >= 0, then add slack (<=), surplus (>=) and artificial
  // (= and >=) columns.
  Eigen::MatrixXd a = lp.a;
  Eigen::VectorXd b = lp.b;
  std::vector<RowSense> sense = lp.sense;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      a.row(i) *= -1.0;
      b(i) = -b(i);
      if (sense[static_cast<std::size_t>(i)] == RowSense::less_equal) {
        sense[static_cast<std::size_t>(i)] = RowSense::greater_equal;
      } else if (sense[static_cast<std::size_t>(i)] == RowSense::greater_equal) {
        sense[static_cast<std::size_t>(i)] = RowSense::less_equal;
      }
    }
  }
  int slack = 0;
  int artificial = 0;
  for (auto s : sense) {
    if (s != RowSense::equal) ++slack;
    if (s != RowSense::less_equal) ++artificial;
  }
  const int cols = n + slack + artificial;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, cols, m, 1) = b;
  std::vector<int> basis(static_cast<std::size_t>(m));
  int next_slack = n;
  int next_art = n + slack;
  for (int i = 0; i < m; ++i) {
    const auto s = sense[static_cast<std::size_t>(i)];
    if (s == RowSense::less_equal) {
      t(i, next_slack) = 1.0;
      basis[static_cast<std::size_t>(i)] = next_slack++;
    } else {
      if (s == RowSense::greater_equal) t(i, next_slack++) = -1.0;
      t(i, next_art) = 1.0;
      basis[static_cast<std::size_t>(i)] = next_art++;
    }
  }

  LpSolution out;
  Tableau tab(std::move(t), std::move(basis), tol);
  auto& d = tab.data();
  // Phase 1: minimize the sum of artificials.
  if (artificial > 0) {
    d.row(m).setZero();
    for (int j = n + slack; j < cols; ++j) d(m, j) = 1.0;
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] >= n + slack) d.row(m) -= d.row(i);
    }
    tab.optimize(cols, out.pivots);
    if (-d(m, cols) > tol * std::max(1.0, b.cwiseAbs().maxCoeff()) * 10.0) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Drive artificials that stayed basic (at zero) out of the basis.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < n + slack) continue;
      for (int j = 0; j < n + slack; ++j) {
        if (std::abs(d(i, j)) > tol) {
          tab.pivot(i, j);
          ++out.pivots;
          break;
        }
      }
    }
  }
  // Phase 2 on the original objective (as a minimization of -c'x).
  d.row(m).setZero();
  d.block(m, 0, 1, n) = -lp.c.transpose();
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis()[static_cast<std::size_t>(i)];
    if (bj < n && d(m, bj) != 0.0) d.row(m) -= d(m, bj) * d.row(i);
  }
  if (!tab.optimize(n + slack, out.pivots)) {
    out.status = LpStatus::unbounded;
    return out;
  }
  out.status = LpStatus::optimal;
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis()[static_cast<std::size_t>(i)];
    if (bj < n) out.x(bj) = d(i, cols);
  }
  out.objective = lp.c.dot(out.x);
  return out;
}

}  // namespace evsched
