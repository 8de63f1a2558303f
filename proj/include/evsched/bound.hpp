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

// Performance upper bound from the relaxed problem: the activation limit is
// only required on average, (1 - beta) E sum_t beta^t a_i[t] <= M/N, which
// decouples the chargers. The bound is N times the optimal value of the
// single-charger constrained MDP.
//
// Primary path: Lagrangian dual minimized over the multiplier, each dual
// point solved exactly. Cross-check: the occupation-measure LP.
//
// Initial distribution mu0: empty charger, period 0, cost state drawn from
// Instance::initial_cost_distribution().

#pragma once

#include "evsched/model.hpp"
#include "evsched/simplex.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace evsched {

/// Single-charger MDP over ExtendedStateSpace(instance), both actions in
/// every state.
struct ChargerMdp {
  int states = 0;
  std::vector<std::array<double, 2>> reward;
  std::vector<std::array<std::vector<std::pair<int, double>>, 2>> next;
};

ChargerMdp build_charger_mdp(const Instance& instance);

/// mu0 over the extended states.
Eigen::VectorXd initial_distribution(const Instance& instance);

/// Exact discounted value of a stationary deterministic policy (action per
/// extended state) with reward `reward` per (state, action); dense solve.
Eigen::VectorXd evaluate_charger_policy(const ChargerMdp& mdp, const std::vector<int>& action,
                                        double discount,
                                        const std::vector<std::array<double, 2>>& reward);

/// Unconstrained single-charger problem with reward R_a - lambda * a.
///
/// Within one EV's stay the decisions do not depend on what happens after it
/// leaves, so V = L + C: L is the in-stay value from a backward pass over the
/// lead time, and C(T,.) = Phi_T U is linear in the post-departure value
/// U(j,tau). U solves a (K N_tau)-dimensional linear system whose matrix does
/// not depend on lambda and is factored once.
class LagrangianSolver {
 public:
  explicit LagrangianSolver(const Instance& instance);

  struct Point {
    double lambda = 0.0;
    double value = 0.0;                 // V^lambda(mu0)
    double activation_frequency = 0.0;  // (1 - beta) E sum beta^t a_t
    double dual = 0.0;                  // value + lambda (M/N) / (1 - beta)
  };

  Point evaluate(double lambda) const;
  /// V^lambda over the extended states.
  Eigen::VectorXd values(double lambda) const;
  /// Optimal action per extended state at lambda; ties go to passive.
  std::vector<int> policy(double lambda) const;

  /// Upper end of the multiplier search: beyond it activation never pays.
  double lambda_max() const;

 private:
  struct Pass {
    std::vector<double> in_stay;   // L per (T, B, j, tau), T = 1..Tbar
    std::vector<double> activity;  // same layout, reward = a
    std::vector<std::uint8_t> act;
  };
  Pass backward(double lambda) const;
  std::size_t slot(int lead, int demand, int cost_state, int period) const;
  Eigen::VectorXd post_departure(const std::vector<double>& in_stay) const;
  Eigen::VectorXd assemble(const std::vector<double>& in_stay) const;

  Instance instance_;
  int contexts_ = 0;                 // K * N_tau
  std::vector<Eigen::MatrixXd> phi_; // Phi_T, T = 1..Tbar
  Eigen::PartialPivLU<Eigen::MatrixXd> system_;
  Eigen::VectorXd mu0_;
};

struct BoundResult {
  double bound = 0.0;                 // N * per_charger
  double per_charger = 0.0;
  double lambda = 0.0;
  double activation_frequency = 0.0;
  int evaluations = 0;
  std::string method;
};

/// Golden-section search of the convex dual over [0, lambda_max], then a
/// final step to the intersection of the two supporting lines at the ends
/// of the last bracket (the dual is piecewise linear).
BoundResult solve_bound(const Instance& instance);

struct OccupancyLP {
  LinearProgram lp;
  int states = 0;
  double scale = 1.0;  // objective multiplier 1 / (1 - beta)
  /// Column of x(s, a).
  static int column(int state, int action) { return 2 * state + action; }
};

/// Throws std::invalid_argument unless mu0 is a distribution over the
/// extended states (sums to 1 within 1e-9, nonnegative).
OccupancyLP build_occupancy_lp(const Instance& instance, const Eigen::VectorXd& mu0);

/// Bound by the occupation-measure LP. Dense; meant for small grids.
BoundResult solve_bound_lp(const Instance& instance);

void write_bound_json(const BoundResult& result, std::ostream& os);

}  // namespace evsched
