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

// Whittle index of one charger in the subsidy problem, where the passive
// action earns an extra reward nu per slot. Three independent routes:
//
// * closed_form_index: constant cost only;
// * compute_index_table: exact piecewise-linear recursion over the lead time;
// * index_by_bisection: value iteration of the subsidy problem (including
//   the arrival continuation) plus bisection on nu. Slow; used as an oracle.

#pragma once

#include "evsched/model.hpp"
#include "evsched/piecewise_linear.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace evsched {

using Pwl = PiecewiseLinear<double>;

struct ExtendedState {
  int lead = 0;
  int demand = 0;
  int cost_state = 0;
  int period = 0;
};

/// Index for a constant cost c0 (valid for any period structure).
double closed_form_index(int lead, int demand, double cost, double discount,
                         const PenaltyFunction& penalty);

/// g_h(1,B) = V(1,B+h) - V(1,B) as a function of the subsidy, at lead time 1
/// and cost level `cost`. Requires 1 <= h <= Bbar - B; throws otherwise.
Pwl base_g(int h, int demand, double cost, const PenaltyFunction& penalty, int max_demand);

/// Whittle index over the full extended-state grid. nu(T,0,.,.) = 0 and the
/// empty charger has index 0.
class IndexTable {
 public:
  IndexTable() = default;
  IndexTable(int max_lead, int max_demand, int cost_states, int periods);

  int max_lead() const { return max_lead_; }
  int max_demand() const { return max_demand_; }
  int cost_states() const { return cost_states_; }
  int periods() const { return periods_; }

  double operator()(int lead, int demand, int cost_state, int period) const {
    return values_[offset(lead, demand, cost_state, period)];
  }
  double operator()(const ExtendedState& s) const {
    return (*this)(s.lead, s.demand, s.cost_state, s.period);
  }
  void set(int lead, int demand, int cost_state, int period, double v) {
    values_[offset(lead, demand, cost_state, period)] = v;
  }

  /// CSV with header `T,B,cost_state,period,index`, one row per (T >= 1, B).
  void write_csv(std::ostream& os) const;
  static IndexTable read_csv(std::istream& is);
  void write_json(std::ostream& os) const;

 private:
  std::size_t offset(int lead, int demand, int cost_state, int period) const;

  int max_lead_ = 0;
  int max_demand_ = 0;
  int cost_states_ = 0;
  int periods_ = 0;
  std::vector<double> values_;
};

/// Level-by-level piecewise-linear recursion in the lead time.
///
/// At level T it holds D_T(B,j,tau)(nu) = V(T,B,j,tau) - V(T,0,j,tau) for
/// every B. The arrival continuation is common to all B at the same
/// (T,j,tau), so it cancels and the recursion never sees it. From level T-1
/// the activation advantage
///   f(nu) = nu - (1 - c_j) + beta sum_k P_jk [D_{T-1}(B,k) - D_{T-1}(B-1,k)]
/// is assembled, its least root is the index, and D_T is stitched together
/// at that root from the active and the passive branch.
class IndexRecursion {
 public:
  explicit IndexRecursion(const Instance& instance);

  /// Current lead-time level, 0 before the first advance.
  int level() const { return level_; }
  /// Computes the next level. Throws std::runtime_error if an assembled
  /// activation advantage decreases somewhere by more than 1e-9.
  void advance();

  /// D_T(B,j,tau) at the current level.
  const Pwl& value_difference(int demand, int cost_state, int period) const;
  /// g_h(T,B,j,tau) = D_T(B+h) - D_T(B) at the current level.
  Pwl g(int h, int demand, int cost_state, int period) const;
  /// Activation advantage f used to compute the current level (T >= 2).
  Pwl activation_advantage(int demand, int cost_state, int period) const;
  double index(int demand, int cost_state, int period) const;

  /// Largest |left - right| absorbed at any stitch so far.
  double max_stitch_gap() const { return max_stitch_gap_; }
  /// Smallest slope seen in any activation advantage so far.
  double min_advantage_slope() const { return min_advantage_slope_; }

 private:
  std::size_t slot(int demand, int cost_state, int period) const;
  Pwl expected_next(const std::vector<Pwl>& level, int demand, int cost_state, int period) const;

  Instance instance_;
  int level_ = 0;
  std::vector<Pwl> previous_;
  std::vector<Pwl> current_;
  std::vector<double> index_;
  double max_stitch_gap_ = 0.0;
  double min_advantage_slope_ = 1.0;
};

IndexTable compute_index_table(const Instance& instance);

/// Output of the subsidy value iteration over ExtendedStateSpace(instance).
struct SubsidySolution {
  Eigen::VectorXd values;
  std::vector<bool> passive;    // optimal action; ties resolve to passive
  Eigen::VectorXd advantage;    // Q_passive - Q_active per state
  int iterations = 0;
};

/// Value iteration of the nu-subsidy Bellman operator on the single-charger
/// grid, arrival continuation included. Runs the a-priori iteration count
/// ceil(log(tol (1 - beta) / Rmax) / log beta) from V = 0, so
/// ||V - V*||_inf <= tol.
SubsidySolution subsidy_value_iteration(const Instance& instance, double subsidy, double tol);

/// Half-width of the bisection bracket: 1 + max|c| + max F increment.
double subsidy_bracket(const Instance& instance);

/// Whittle index at `state` by bisection on the subsidy. Throws
/// std::runtime_error if the optimal action does not flip across the bracket.
double index_by_bisection(const Instance& instance, const ExtendedState& state, double tol);

/// All indexes at once by bisection (one value iteration per probe serves
/// every state still being bracketed).
IndexTable index_table_by_bisection(const Instance& instance, double tol);

/// True iff the optimal action at `state` never switches back from passive
/// to active along the sorted grid.
bool check_indexability(const Instance& instance, const ExtendedState& state,
                        const std::vector<double>& subsidy_grid);

/// Same check for every state of the grid; returns the number of states
/// whose passive decision is not monotone.
int count_indexability_violations(const Instance& instance,
                                  const std::vector<double>& subsidy_grid);

}  // namespace evsched
