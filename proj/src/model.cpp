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

#include "evsched/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evsched {
namespace {

constexpr double kStochasticTol = 1e-12;

void check_stochastic(const Eigen::MatrixXd& p, int k, const char* what) {
  if (p.rows() != k || p.cols() != k) {
    throw std::invalid_argument(std::string(what) + ": transition matrix must be K x K");
  }
  if ((p.array() < 0.0).any() || !p.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
  }
  for (int r = 0; r < k; ++r) {
    if (std::abs(p.row(r).sum() - 1.0) > kStochasticTol) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(r) +
                                  " does not sum to 1");
    }
  }
}

}  // namespace

PenaltyFunction::PenaltyFunction(std::vector<double> table) : table_(std::move(table)) {
  if (table_.empty() || table_[0] != 0.0) {
    throw std::invalid_argument("penalty: F(0) must be 0");
  }
  for (std::size_t b = 1; b < table_.size(); ++b) {
    if (!std::isfinite(table_[b]) || table_[b] < table_[b - 1]) {
      throw std::invalid_argument("penalty: F must be finite and nondecreasing");
    }
    if (b >= 2 && (table_[b] - table_[b - 1]) < (table_[b - 1] - table_[b - 2]) - 1e-12) {
      throw std::invalid_argument("penalty: F must be discretely convex");
    }
  }
}

PenaltyFunction PenaltyFunction::quadratic(double kappa, int max_demand) {
  std::vector<double> t(static_cast<std::size_t>(max_demand) + 1);
  for (int b = 0; b <= max_demand; ++b) t[static_cast<std::size_t>(b)] = kappa * b * b;
  return PenaltyFunction(std::move(t));
}

double PenaltyFunction::max_increment() const {
  double m = 0.0;
  for (int b = 1; b <= max_demand(); ++b) m = std::max(m, increment(b));
  return m;
}

CostChain::CostChain(Eigen::VectorXd levels, Eigen::MatrixXd transition)
    : CostChain(std::move(levels), std::vector<Eigen::MatrixXd>{std::move(transition)}) {}

CostChain::CostChain(Eigen::VectorXd levels, std::vector<Eigen::MatrixXd> per_period)
    : levels_(std::move(levels)), matrices_(std::move(per_period)) {
  if (levels_.size() < 1 || !levels_.allFinite()) {
    throw std::invalid_argument("cost chain: need at least one finite level");
  }
  if (matrices_.empty()) throw std::invalid_argument("cost chain: missing transition matrix");
  for (const auto& p : matrices_) check_stochastic(p, size(), "cost chain");
}

CostChain CostChain::constant(double level) {
  return CostChain(Eigen::VectorXd::Constant(1, level), Eigen::MatrixXd::Ones(1, 1));
}

int CostChain::sample_next(int from, int period, double u) const {
  const auto& p = transition(period);
  double acc = 0.0;
  for (int k = 0; k < size(); ++k) {
    acc += p(from, k);
    if (u < acc) return k;
  }
  // u within rounding of 1: last state with positive mass.
  for (int k = size() - 1; k >= 0; --k) {
    if (p(from, k) > 0.0) return k;
  }
  return from;
}

ArrivalModel::ArrivalModel(std::vector<double> rates, std::vector<std::vector<TypeMass>> types)
    : rates_(std::move(rates)), types_(std::move(types)) {
  if (rates_.empty() || rates_.size() != types_.size()) {
    throw std::invalid_argument("arrivals: need one rate and one PMF per period");
  }
  for (std::size_t p = 0; p < rates_.size(); ++p) {
    if (!(rates_[p] >= 0.0 && rates_[p] <= 1.0)) {
      throw std::invalid_argument("arrivals: rate must lie in [0,1]");
    }
    double total = 0.0;
    for (const auto& m : types_[p]) {
      if (m.probability < 0.0) throw std::invalid_argument("arrivals: negative PMF entry");
      if (m.state.lead < 1 || m.state.demand < 1) {
        throw std::invalid_argument("arrivals: arriving EVs need T >= 1 and B >= 1");
      }
      total += m.probability;
    }
    if (std::abs(total - 1.0) > kStochasticTol) {
      throw std::invalid_argument("arrivals: PMF of period " + std::to_string(p) +
                                  " does not sum to 1");
    }
  }
}

ArrivalModel ArrivalModel::uniform_feasible(double rate, int max_lead, int max_demand,
                                            int periods) {
  std::vector<TypeMass> pmf;
  for (int t = 1; t <= max_lead; ++t) {
    for (int b = 1; b <= std::min(t, max_demand); ++b) pmf.push_back({{t, b}, 0.0});
  }
  for (auto& m : pmf) m.probability = 1.0 / static_cast<double>(pmf.size());
  return ArrivalModel(std::vector<double>(static_cast<std::size_t>(periods), rate),
                      std::vector<std::vector<TypeMass>>(static_cast<std::size_t>(periods), pmf));
}

ChargerState ArrivalModel::sample_type(int period, double u) const {
  const auto& pmf = types(period);
  double acc = 0.0;
  for (const auto& m : pmf) {
    acc += m.probability;
    if (u < acc) return m.state;
  }
  for (auto it = pmf.rbegin(); it != pmf.rend(); ++it) {
    if (it->probability > 0.0) return it->state;
  }
  return pmf.back().state;
}

void Instance::validate() const {
  if (chargers < 1) throw std::invalid_argument("instance: need N >= 1 chargers");
  if (capacity < 0 || capacity > chargers) {
    throw std::invalid_argument("instance: activation limit must satisfy 0 <= M <= N");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument("instance: discount must lie in (0,1)");
  }
  if (max_lead < 1 || max_demand < 1) {
    throw std::invalid_argument("instance: Tbar and Bbar must be >= 1");
  }
  if (penalty.max_demand() < max_demand) {
    throw std::invalid_argument("instance: penalty table shorter than Bbar + 1");
  }
  if (cost.size() < 1) throw std::invalid_argument("instance: empty cost chain");
  if (cost.per_period() && cost.matrix_count() != periods()) {
    throw std::invalid_argument("instance: per-period cost matrices must match arrival periods");
  }
  for (int p = 0; p < periods(); ++p) {
    for (const auto& m : arrivals.types(p)) {
      if (m.probability > 0.0 && (m.state.lead > max_lead || m.state.demand > max_demand)) {
        throw std::invalid_argument("instance: arrival PMF support exceeds (Tbar, Bbar)");
      }
    }
  }
}

Eigen::VectorXd Instance::initial_cost_distribution() const {
  const int k = cost.size();
  Eigen::MatrixXd cycle = Eigen::MatrixXd::Identity(k, k);
  const int steps = cost.per_period() ? periods() : 1;
  for (int p = 0; p < steps; ++p) cycle = cycle * cost.transition(p);
  // pi (cycle - I) = 0 with sum(pi) = 1, solved in least squares.
  Eigen::MatrixXd a(k + 1, k);
  a.topRows(k) = cycle.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = 1.0;
  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

double Instance::max_slot_reward() const {
  const double c_abs = cost.levels().cwiseAbs().maxCoeff();
  return 1.0 + c_abs + penalty(max_demand);
}

SystemState empty_system(const Instance& instance, int cost_state) {
  SystemState s;
  s.cost_state = cost_state;
  s.chargers.assign(static_cast<std::size_t>(instance.chargers), ChargerState{});
  return s;
}

int ActionVector::count() const {
  return static_cast<int>(std::count(active_.begin(), active_.end(), std::uint8_t{1}));
}

double reward(ChargerState s, double cost, bool active, const PenaltyFunction& penalty) {
  if (s.demand <= 0 || s.lead <= 0) return 0.0;
  const double a = active ? 1.0 : 0.0;
  if (s.lead > 1) return (1.0 - cost) * a;
  return (1.0 - cost) * a - penalty(s.demand - (active ? 1 : 0));
}

std::vector<std::pair<ChargerState, double>> successor_distribution(
    ChargerState s, bool active, int period, const ArrivalModel& arrivals) {
  if (s.lead > 1) return {{advance_attached(s, active), 1.0}};
  const double rho = arrivals.rate(period);
  std::vector<std::pair<ChargerState, double>> out;
  if (rho < 1.0) out.emplace_back(ChargerState{}, 1.0 - rho);
  if (rho > 0.0) {
    for (const auto& m : arrivals.types(period)) {
      if (m.probability > 0.0) out.emplace_back(m.state, rho * m.probability);
    }
  }
  return out;
}

double discounted_return(const std::vector<double>& rewards, double discount) {
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= discount;
  }
  return total;
}

void check_action(const Instance& instance, const SystemState& s, const ActionVector& action) {
  if (action.size() != static_cast<int>(s.chargers.size())) {
    throw std::invalid_argument("action vector size does not match the number of chargers");
  }
  if (action.count() > instance.capacity) {
    throw std::invalid_argument("action vector exceeds the activation limit M");
  }
}

ExtendedStateSpace::ExtendedStateSpace(int max_lead, int max_demand, int cost_states,
                                       int periods)
    : max_lead_(max_lead), max_demand_(max_demand), cost_states_(cost_states), periods_(periods) {
  if (max_lead < 1 || max_demand < 1 || cost_states < 1 || periods < 1) {
    throw std::invalid_argument("extended state space: all dimensions must be positive");
  }
}

}  // namespace evsched
