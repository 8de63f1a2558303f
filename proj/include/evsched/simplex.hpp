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

// Dense two-phase simplex for small linear programs.

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace evsched {

enum class RowSense { less_equal, equal, greater_equal };

/// maximize c'x  subject to  A x (sense) b,  x >= 0.
struct LinearProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<RowSense> sense;
  Eigen::VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  int pivots = 0;
};

/// Bland's rule throughout, so it cannot cycle. Meant for a few hundred rows.
LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-9);

}  // namespace evsched
