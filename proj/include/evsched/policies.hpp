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

// Scheduling policies. Each maps a system state to an action vector that
// respects the activation limit and never activates an empty charger or a
// charger with B = 0.
//
// Tie-breaking is uniform: policy key, then larger B, then lower charger id.

#pragma once

#include "evsched/index.hpp"
#include "evsched/model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace evsched {

struct PolicyDecision {
  ActionVector action;
  /// Key the policy ranked charger i by (index, deadline, laxity, planned
  /// units); NaN for chargers that were not candidates.
  std::vector<double> priority;
  /// Swaps made by the LLLP interchange, 0 when it was not applied.
  int interchanges = 0;
};

/// Top-M chargers by Whittle index against M dummy arms of index 0. A
/// charger needs a strictly positive index to be activated.
PolicyDecision whittle_policy(const SystemState& s, const IndexTable& table, int capacity);

/// Charger i dominates k iff laxity_i <= laxity_k and B_i >= B_k with one
/// inequality strict. While an inactive occupied charger dominates an active
/// one, the pair is swapped. Candidates are scanned by (laxity asc, B desc,
/// id asc); each swaps out the dominated active charger that is last in the
/// same order. Returns the fixed point; `swaps` receives the swap count.
ActionVector lllp_interchange(const SystemState& s, const ActionVector& a, int* swaps = nullptr);

/// Earliest deadline first.
PolicyDecision edf_policy(const SystemState& s, int capacity);
/// Least laxity first.
PolicyDecision llf_policy(const SystemState& s, int capacity);

/// Conditional expected cost E[c(t+k) | c(t) = j, period(t) = tau].
class CostForecast {
 public:
  CostForecast() = default;
  CostForecast(const Instance& instance, int horizon);

  int horizon() const { return horizon_; }
  double expected(int k, int cost_state, int period) const {
    return table_[static_cast<std::size_t>(period)](cost_state, k);
  }

 private:
  int horizon_ = 0;
  std::vector<Eigen::MatrixXd> table_;  // per period: K x (horizon + 1)
};

/// Re-planned valley filling. Plans every attached EV's remaining demand over
/// its remaining slots, at most one unit per EV per slot and M per slot.
/// Charging in slot k earns 1 - E[c(t+k)]; the u-th unit left undone costs
/// F(u) - F(u-1). Solved exactly as a min-cost flow assuming no further
/// arrivals; only slot 0 of the plan is executed.
PolicyDecision valley_filling_policy(const SystemState& s, const Instance& instance,
                                     const CostForecast& forecast);

enum class PolicyKind { whittle, whittle_lllp, edf, llf, valley };

/// "whittle", "whittle+lllp", "edf", "llf", "valley"; throws
/// std::invalid_argument on anything else.
PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);

/// A policy bound to one instance, with whatever tables it needs.
class Scheduler {
 public:
  /// Builds the index table when the policy needs one and none is given.
  Scheduler(const Instance& instance, PolicyKind kind,
            std::shared_ptr<const IndexTable> table = nullptr);

  PolicyKind kind() const { return kind_; }
  std::string name() const { return policy_name(kind_); }
  PolicyDecision decide(const SystemState& s) const;

 private:
  Instance instance_;
  PolicyKind kind_;
  std::shared_ptr<const IndexTable> table_;
  CostForecast forecast_;
};

}  // namespace evsched
