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

// Charging-facility MDP: charger states, exogenous cost chain, arrivals,
// rewards and one-slot system dynamics.
//
// Conventions used throughout the library:
// * lead time T and remaining demand B are integer slots; an empty charger
//   is (0,0) and an attached EV always has T >= 1;
// * cost states and periods are 0-based;
// * the charging price is normalized to 1 per slot, so charging one slot at
//   cost level c earns 1 - c.

#pragma once

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

namespace evsched {

struct ChargerState {
  int lead = 0;    // T: slots until departure
  int demand = 0;  // B: remaining charging slots requested

  bool empty() const { return lead == 0; }
  int laxity() const { return lead - demand; }

  friend bool operator==(const ChargerState&, const ChargerState&) = default;
};

/// Convex, nondecreasing non-completion penalty F(0..Bbar), F(0) = 0.
class PenaltyFunction {
 public:
  PenaltyFunction() = default;
  explicit PenaltyFunction(std::vector<double> table);

  /// Tabulates F(b) = kappa * b^2 for b = 0..max_demand.
  static PenaltyFunction quadratic(double kappa, int max_demand);

  double operator()(int b) const { return table_.at(static_cast<std::size_t>(b)); }
  /// F(b) - F(b-1), b >= 1.
  double increment(int b) const { return (*this)(b) - (*this)(b - 1); }
  double max_increment() const;
  int max_demand() const { return static_cast<int>(table_.size()) - 1; }
  const std::vector<double>& table() const { return table_; }

 private:
  std::vector<double> table_{0.0};
};

/// Exogenous finite-state Markov chain of the marginal charging cost.
/// Either one time-homogeneous matrix or one matrix per period.
class CostChain {
 public:
  CostChain() = default;
  CostChain(Eigen::VectorXd levels, Eigen::MatrixXd transition);
  CostChain(Eigen::VectorXd levels, std::vector<Eigen::MatrixXd> per_period);

  static CostChain constant(double level);

  int size() const { return static_cast<int>(levels_.size()); }
  double level(int j) const { return levels_(j); }
  const Eigen::VectorXd& levels() const { return levels_; }
  bool per_period() const { return matrices_.size() > 1; }
  int matrix_count() const { return static_cast<int>(matrices_.size()); }
  /// Matrix that drives the transition out of a slot in `period`.
  const Eigen::MatrixXd& transition(int period) const {
    return matrices_[per_period() ? static_cast<std::size_t>(period) : 0];
  }
  /// Samples the next cost state from row `from` using uniform draw u.
  int sample_next(int from, int period, double u) const;

 private:
  Eigen::VectorXd levels_;
  std::vector<Eigen::MatrixXd> matrices_;
};

struct TypeMass {
  ChargerState state;
  double probability = 0.0;
};

/// Cyclostationary arrivals: per period an arrival probability and a PMF
/// over the (T,B) of a newly attached EV.
class ArrivalModel {
 public:
  ArrivalModel() = default;
  ArrivalModel(std::vector<double> rates, std::vector<std::vector<TypeMass>> types);

  /// Same rate every period; PMF uniform over 1 <= B <= min(T, Bbar).
  static ArrivalModel uniform_feasible(double rate, int max_lead, int max_demand,
                                       int periods = 1);

  int periods() const { return static_cast<int>(rates_.size()); }
  double rate(int period) const { return rates_[static_cast<std::size_t>(period)]; }
  const std::vector<TypeMass>& types(int period) const {
    return types_[static_cast<std::size_t>(period)];
  }
  ChargerState sample_type(int period, double u) const;

 private:
  std::vector<double> rates_;
  std::vector<std::vector<TypeMass>> types_;
};

struct Instance {
  int chargers = 10;     // N
  int capacity = 5;      // M
  double discount = 0.999;
  int max_lead = 12;     // Tbar
  int max_demand = 9;    // Bbar
  PenaltyFunction penalty = PenaltyFunction::quadratic(0.2, 9);
  ArrivalModel arrivals = ArrivalModel::uniform_feasible(0.7, 12, 9);
  CostChain cost = CostChain::constant(0.5);

  int periods() const { return arrivals.periods(); }
  int cost_states() const { return cost.size(); }

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;

  /// Distribution of the cost state at period 0 in steady state: the
  /// stationary law of the one-cycle product matrix.
  Eigen::VectorXd initial_cost_distribution() const;

  /// Upper bound on |per-charger reward| in one slot.
  double max_slot_reward() const;
};

struct SystemState {
  int period = 0;
  int cost_state = 0;
  std::vector<ChargerState> chargers;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Empty facility at period 0 in the given cost state.
SystemState empty_system(const Instance& instance, int cost_state);

class ActionVector {
 public:
  ActionVector() = default;
  explicit ActionVector(int n) : active_(static_cast<std::size_t>(n), 0) {}

  int size() const { return static_cast<int>(active_.size()); }
  bool operator[](int i) const { return active_[static_cast<std::size_t>(i)] != 0; }
  void set(int i, bool on) { active_[static_cast<std::size_t>(i)] = on ? 1 : 0; }
  int count() const;

  friend bool operator==(const ActionVector&, const ActionVector&) = default;

 private:
  std::vector<std::uint8_t> active_;
};

/// Per-slot reward of one charger: (1-c)a, minus F(B-a) at the deadline slot.
double reward(ChargerState s, double cost, bool active, const PenaltyFunction& penalty);

/// Next-slot distribution of one charger. Departures (T <= 1) are refilled by
/// an arrival drawn from the period-`period` arrival law.
std::vector<std::pair<ChargerState, double>> successor_distribution(
    ChargerState s, bool active, int period, const ArrivalModel& arrivals);

/// Deterministic part of the transition (T > 1 only).
inline ChargerState advance_attached(ChargerState s, bool active) {
  return {s.lead - 1, s.demand - ((active && s.demand > 0) ? 1 : 0)};
}

/// Sum_t discount^t rewards[t].
double discounted_return(const std::vector<double>& rewards, double discount);

/// Source of the exogenous uniforms consumed by one system step.
template <typename N>
concept StepNoise = requires(N& noise, int charger) {
  { noise.arrival_uniform(charger) } -> std::convertible_to<double>;
  { noise.type_uniform(charger) } -> std::convertible_to<double>;
  { noise.cost_uniform() } -> std::convertible_to<double>;
};

struct StepOutcome {
  SystemState next;
  double reward = 0.0;     // undiscounted slot reward
  double revenue = 0.0;    // units charged (price 1 each)
  double energy_cost = 0.0;
  double penalty = 0.0;
  int departures = 0;      // EVs leaving at the end of this slot
  int completed = 0;       // of which fully charged
};

/// Advances the whole facility one slot. Throws std::invalid_argument when
/// the action exceeds the activation limit or does not match the state size.
template <StepNoise Noise>
StepOutcome system_step(const Instance& instance, const SystemState& s,
                        const ActionVector& action, Noise& noise);

void check_action(const Instance& instance, const SystemState& s, const ActionVector& action);

/// Indexing of the single-charger extended state (T, B, cost, period).
class ExtendedStateSpace {
 public:
  ExtendedStateSpace(int max_lead, int max_demand, int cost_states, int periods);
  explicit ExtendedStateSpace(const Instance& instance)
      : ExtendedStateSpace(instance.max_lead, instance.max_demand, instance.cost_states(),
                           instance.periods()) {}

  int max_lead() const { return max_lead_; }
  int max_demand() const { return max_demand_; }
  int cost_states() const { return cost_states_; }
  int periods() const { return periods_; }

  /// Charger states per (cost, period): (0,0) plus T in 1..Tbar, B in 0..Bbar.
  int local_count() const { return 1 + max_lead_ * (max_demand_ + 1); }
  int size() const { return local_count() * cost_states_ * periods_; }

  int local_index(ChargerState s) const {
    return s.lead == 0 ? 0 : 1 + (s.lead - 1) * (max_demand_ + 1) + s.demand;
  }
  ChargerState local_state(int local) const {
    if (local == 0) return {};
    return {1 + (local - 1) / (max_demand_ + 1), (local - 1) % (max_demand_ + 1)};
  }
  int index(ChargerState s, int cost, int period) const {
    return (period * cost_states_ + cost) * local_count() + local_index(s);
  }
  int next_period(int period) const { return (period + 1) % periods_; }

 private:
  int max_lead_;
  int max_demand_;
  int cost_states_;
  int periods_;
};

// ---------------------------------------------------------------------------

template <StepNoise Noise>
StepOutcome system_step(const Instance& instance, const SystemState& s,
                        const ActionVector& action, Noise& noise) {
  check_action(instance, s, action);
  const double c = instance.cost.level(s.cost_state);
  StepOutcome out;
  out.next.chargers.resize(s.chargers.size());
  for (int i = 0; i < static_cast<int>(s.chargers.size()); ++i) {
    const ChargerState cs = s.chargers[static_cast<std::size_t>(i)];
    const bool a = action[i];
    const double r = reward(cs, c, a, instance.penalty);
    out.reward += r;
    if (a && cs.demand > 0) {
      out.revenue += 1.0;
      out.energy_cost += c;
    }
    if (cs.lead == 1) {
      const int left = cs.demand - ((a && cs.demand > 0) ? 1 : 0);
      out.penalty += instance.penalty(left);
      ++out.departures;
      if (left == 0) ++out.completed;
    }
    ChargerState next;
    if (cs.lead > 1) {
      next = advance_attached(cs, a);
    } else if (noise.arrival_uniform(i) < instance.arrivals.rate(s.period)) {
      next = instance.arrivals.sample_type(s.period, noise.type_uniform(i));
    }
    out.next.chargers[static_cast<std::size_t>(i)] = next;
  }
  out.next.cost_state = instance.cost.sample_next(s.cost_state, s.period, noise.cost_uniform());
  out.next.period = (s.period + 1) % instance.periods();
  return out;
}

}  // namespace evsched
