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

#include "evsched/sim.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evsched {
namespace {

constexpr std::int64_t kMaxJointStates = 1000000;

// Joint state layout: ((tau K + j) L^N) + sum_i local_i L^i.
class JointSpace {
 public:
  explicit JointSpace(const Instance& instance)
      : instance_(instance), local_(instance), n_(instance.chargers) {
    if (n_ > 16) throw std::invalid_argument("joint DP: at most 16 chargers");
    const std::int64_t count = joint_state_count(instance);
    if (count > kMaxJointStates) {
      throw std::invalid_argument("joint DP: " + std::to_string(count) +
                                  " joint states exceed the limit of 1e6");
    }
    states_ = static_cast<int>(count);
    block_ = 1;
    for (int i = 0; i < n_; ++i) block_ *= local_.local_count();
    // Per (period, local state, action): successor local states.
    const int periods = instance.periods();
    succ_.resize(static_cast<std::size_t>(periods * local_.local_count() * 2));
    for (int tau = 0; tau < periods; ++tau) {
      for (int l = 0; l < local_.local_count(); ++l) {
        for (int a = 0; a < 2; ++a) {
          auto& out = succ_[static_cast<std::size_t>((tau * local_.local_count() + l) * 2 + a)];
          for (const auto& [s, p] :
               successor_distribution(local_.local_state(l), a == 1, tau, instance.arrivals)) {
            out.emplace_back(local_.local_index(s), p);
          }
        }
      }
    }
  }

  int size() const { return states_; }
  int block() const { return block_; }

  void decode(int index, int& tau, int& j, std::vector<int>& locals) const {
    const int context = index / block_;
    int rest = index % block_;
    tau = context / instance_.cost_states();
    j = context % instance_.cost_states();
    locals.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      locals[static_cast<std::size_t>(i)] = rest % local_.local_count();
      rest /= local_.local_count();
    }
  }

  SystemState system_state(int index) const {
    int tau = 0;
    int j = 0;
    std::vector<int> locals;
    decode(index, tau, j, locals);
    SystemState s;
    s.period = tau;
    s.cost_state = j;
    for (int l : locals) s.chargers.push_back(local_.local_state(l));
    return s;
  }

  double slot_reward(int j, const std::vector<int>& locals, std::uint32_t mask) const {
    double r = 0.0;
    for (int i = 0; i < n_; ++i) {
      r += reward(local_.local_state(locals[static_cast<std::size_t>(i)]), instance_.cost.level(j),
                  (mask >> i) & 1u, instance_.penalty);
    }
    return r;
  }

  // E[V(next)] for the given action mask.
  double expected_next(const Eigen::VectorXd& v, int tau, int j, const std::vector<int>& locals,
                       std::uint32_t mask) const {
    const int nt = (tau + 1) % instance_.periods();
    const auto& p = instance_.cost.transition(tau);
    double total = 0.0;
    for (int k = 0; k < instance_.cost_states(); ++k) {
      if (p(j, k) == 0.0) continue;
      const int base = (nt * instance_.cost_states() + k) * block_;
      total += p(j, k) * chargers_expectation(v, base, tau, locals, mask, 0, 0, 1);
    }
    return total;
  }

  bool chargeable(int local) const { return local_.local_state(local).demand > 0; }

  int empty_index(int tau, int j) const { return (tau * instance_.cost_states() + j) * block_; }

 private:
  double chargers_expectation(const Eigen::VectorXd& v, int base, int tau,
                              const std::vector<int>& locals, std::uint32_t mask, int i,
                              int offset, int stride) const {
    if (i == n_) return v(base + offset);
    const auto& succ = succ_[static_cast<std::size_t>(
        (tau * local_.local_count() + locals[static_cast<std::size_t>(i)]) * 2 +
        static_cast<int>((mask >> i) & 1u))];
    double total = 0.0;
    for (const auto& [l2, q] : succ) {
      total += q * chargers_expectation(v, base, tau, locals, mask, i + 1, offset + l2 * stride,
                                        stride * local_.local_count());
    }
    return total;
  }

  const Instance& instance_;
  ExtendedStateSpace local_;
  int n_;
  int states_ = 0;
  int block_ = 1;
  std::vector<std::vector<std::pair<int, double>>> succ_;
};

int joint_iterations(const Instance& instance, double tol) {
  const double beta = instance.discount;
  const double r_max = instance.chargers * instance.max_slot_reward();
  return std::max(1, static_cast<int>(std::ceil(std::log(tol * (1.0 - beta) / r_max) /
                                                std::log(beta))));
}

double start_value(const Instance& instance, const JointSpace& space, const Eigen::VectorXd& v) {
  const Eigen::VectorXd pi = instance.initial_cost_distribution();
  double value = 0.0;
  for (int j = 0; j < instance.cost_states(); ++j) value += pi(j) * v(space.empty_index(0, j));
  return value;
}

}  // namespace

std::int64_t joint_state_count(const Instance& instance) {
  const ExtendedStateSpace local(instance);
  double count = static_cast<double>(instance.periods()) * instance.cost_states() *
                 std::pow(static_cast<double>(local.local_count()), instance.chargers);
  return count > 9e18 ? std::numeric_limits<std::int64_t>::max()
                      : static_cast<std::int64_t>(count);
}

JointDpResult brute_force_joint_dp(const Instance& instance, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("joint DP: tol must be > 0");
  instance.validate();
  const JointSpace space(instance);
  const int n = space.size();
  const double beta = instance.discount;

  // Admissible masks per state: subsets of chargeable chargers, at most M.
  std::vector<std::vector<std::uint32_t>> masks(static_cast<std::size_t>(n));
  std::vector<int> locals;
  for (int s = 0; s < n; ++s) {
    int tau = 0;
    int j = 0;
    space.decode(s, tau, j, locals);
    std::uint32_t can = 0;
    for (int i = 0; i < instance.chargers; ++i) {
      if (space.chargeable(locals[static_cast<std::size_t>(i)])) can |= 1u << i;
    }
    for (std::uint32_t m = can;; m = (m - 1) & can) {
      if (std::popcount(m) <= instance.capacity) masks[static_cast<std::size_t>(s)].push_back(m);
      if (m == 0) break;
    }
  }

  JointDpResult out;
  out.states = n;
  out.iterations = joint_iterations(instance, tol);
  out.action.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd next(n);
  for (int it = 0; it < out.iterations; ++it) {
    for (int s = 0; s < n; ++s) {
      int tau = 0;
      int j = 0;
      space.decode(s, tau, j, locals);
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::uint32_t m : masks[static_cast<std::size_t>(s)]) {
        const double q = space.slot_reward(j, locals, m) + beta * space.expected_next(v, tau, j, locals, m);
        if (q > best) {
          best = q;
          arg = m;
        }
      }
      next(s) = best;
      out.action[static_cast<std::size_t>(s)] = arg;
    }
    v.swap(next);
  }
  out.values = std::move(v);
  out.value = start_value(instance, space, out.values);
  return out;
}

double evaluate_joint_policy(const Instance& instance, const Scheduler& policy, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("joint policy evaluation: tol must be > 0");
  instance.validate();
  const JointSpace space(instance);
  const int n = space.size();
  const double beta = instance.discount;
  std::vector<std::uint32_t> action(static_cast<std::size_t>(n));
  std::vector<double> slot_reward(static_cast<std::size_t>(n));
  std::vector<int> locals;
  for (int s = 0; s < n; ++s) {
    const SystemState st = space.system_state(s);
    const PolicyDecision d = policy.decide(st);
    check_action(instance, st, d.action);
    std::uint32_t m = 0;
    for (int i = 0; i < instance.chargers; ++i) {
      if (d.action[i]) m |= 1u << i;
    }
    action[static_cast<std::size_t>(s)] = m;
    int tau = 0;
    int j = 0;
    space.decode(s, tau, j, locals);
    slot_reward[static_cast<std::size_t>(s)] = space.slot_reward(j, locals, m);
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd next(n);
  const int iterations = joint_iterations(instance, tol);
  for (int it = 0; it < iterations; ++it) {
    for (int s = 0; s < n; ++s) {
      int tau = 0;
      int j = 0;
      space.decode(s, tau, j, locals);
      next(s) = slot_reward[static_cast<std::size_t>(s)] +
                beta * space.expected_next(v, tau, j, locals, action[static_cast<std::size_t>(s)]);
    }
    v.swap(next);
  }
  return start_value(instance, space, v);
}

}  // namespace evsched
