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

// Monte Carlo evaluation with common random numbers.
//
// Every exogenous draw comes from a stream named by (seed, purpose, charger):
// one stream per charger for the arrival coin, one per charger for the EV
// type, and one for the cost path. A charger draws from its streams only when
// it is vacated, so two policies that vacate a charger at the same slots see
// the same arrivals there, and the cost path never depends on the policy.

#pragma once

#include "evsched/model.hpp"
#include "evsched/policies.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace evsched {

/// The named streams of one episode.
class EpisodeNoise {
 public:
  EpisodeNoise(std::uint64_t seed, int chargers);

  double arrival_uniform(int charger) { return draw(arrival_[static_cast<std::size_t>(charger)]); }
  double type_uniform(int charger) { return draw(type_[static_cast<std::size_t>(charger)]); }
  double cost_uniform() { return draw(cost_); }

 private:
  static double draw(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

  std::vector<std::mt19937_64> arrival_;
  std::vector<std::mt19937_64> type_;
  std::mt19937_64 cost_;
};

static_assert(StepNoise<EpisodeNoise>);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  std::string policy;
  int horizon = 0;
  // Discounted sums; reward = revenue - energy_cost - penalty.
  double reward = 0.0;
  double revenue = 0.0;
  double energy_cost = 0.0;
  double penalty = 0.0;
  // Undiscounted totals.
  double energy_delivered = 0.0;  // charged slots
  double penalties_paid = 0.0;
  int departures = 0;
  int completed = 0;
  double completion_fraction = 0.0;
  double activations_per_slot = 0.0;
  long long interchanges = 0;
};

/// Smallest H with beta^H (1 + F(Bbar)) <= rel_tol: the discounted tail after
/// H slots is then below rel_tol N / (1 - beta).
int default_horizon(const Instance& instance, double rel_tol = 1e-3);

/// Starts from an empty facility at period 0 with the cost state drawn from
/// Instance::initial_cost_distribution() by the cost stream. Throws
/// std::invalid_argument if the policy breaks the activation limit.
EpisodeMetrics run_episode(const Instance& instance, const Scheduler& policy, std::uint64_t seed,
                           int horizon);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;  // two-sided Student-t interval
  double stddev = 0.0;
  int n = 0;
};

/// Requires at least 2 samples.
MeanInterval mean_interval(const std::vector<double>& samples, double level = 0.95);

struct PairedDifference {
  std::string policy;
  std::string baseline;
  MeanInterval difference;  // policy - baseline, per seed
};

struct ComparisonReport {
  std::vector<std::string> policies;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<EpisodeMetrics>> runs;  // [policy][seed]
  std::vector<MeanInterval> reward;               // per policy
  std::vector<PairedDifference> paired;

  int policy_position(const std::string& name) const;
  const MeanInterval& reward_of(const std::string& name) const;
  /// Paired reward difference a - b on the common seeds.
  MeanInterval paired_difference(const std::string& a, const std::string& b,
                                 double level = 0.95) const;
};

struct MonteCarloOptions {
  int horizon = 0;       // 0 selects default_horizon
  int threads = 1;
  std::optional<std::string> baseline;
  double level = 0.95;
};

/// Runs every policy on every seed. Results are ordered by (policy, seed)
/// independent of the thread count. With a single seed the intervals are
/// NaN. Throws std::invalid_argument on no seeds or a baseline that is not
/// among the policies.
ComparisonReport monte_carlo(const Instance& instance, const std::vector<Scheduler>& policies,
                             const std::vector<std::uint64_t>& seeds,
                             const MonteCarloOptions& options = {});

/// seeds first, first + 1, ..., first + count - 1.
std::vector<std::uint64_t> seed_range(std::uint64_t first, int count);

void write_episodes_csv(const ComparisonReport& report, std::ostream& os);
void write_report_json(const ComparisonReport& report, std::ostream& os);
/// One row per policy: m_over_n, chargers, reward_per_charger, half-width.
void write_plot_csv(const ComparisonReport& report, const Instance& instance, std::ostream& os,
                    std::optional<double> bound = std::nullopt);

// ---------------------------------------------------------------------------
// Joint-system oracle for toy instances.

struct JointDpResult {
  double value = 0.0;  // expected value from the empty facility under mu0
  Eigen::VectorXd values;
  std::vector<std::uint32_t> action;  // optimal activation bitmask per state
  int iterations = 0;
  std::int64_t states = 0;
};

/// Number of joint states N_tau K (1 + Tbar (Bbar + 1))^N.
std::int64_t joint_state_count(const Instance& instance);

/// Value iteration on the full joint MDP, every action with at most M active
/// chargers. Throws std::invalid_argument when the joint space exceeds 1e6
/// states or N > 16.
JointDpResult brute_force_joint_dp(const Instance& instance, double tol);

/// Value of a policy on the joint MDP, computed by value iteration to `tol`.
double evaluate_joint_policy(const Instance& instance, const Scheduler& policy, double tol);

}  // namespace evsched
