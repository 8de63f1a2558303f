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

#include "evsched/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace evsched {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool chargeable(const ChargerState& c) { return c.lead >= 1 && c.demand > 0; }

// Activates up to `capacity` chargeable chargers in ascending `key` order,
// ties by larger B then lower id.
template <typename Key>
PolicyDecision rank_and_activate(const SystemState& s, int capacity, Key key) {
  const int n = static_cast<int>(s.chargers.size());
  PolicyDecision d;
  d.action = ActionVector(n);
  d.priority.assign(static_cast<std::size_t>(n), kNaN);
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    const auto& c = s.chargers[static_cast<std::size_t>(i)];
    if (!chargeable(c)) continue;
    d.priority[static_cast<std::size_t>(i)] = key(c);
    order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ka = d.priority[static_cast<std::size_t>(a)];
    const double kb = d.priority[static_cast<std::size_t>(b)];
    if (ka != kb) return ka < kb;
    const int ba = s.chargers[static_cast<std::size_t>(a)].demand;
    const int bb = s.chargers[static_cast<std::size_t>(b)].demand;
    if (ba != bb) return ba > bb;
    return a < b;
  });
  const int take = std::min<int>(capacity, static_cast<int>(order.size()));
  for (int r = 0; r < take; ++r) d.action.set(order[static_cast<std::size_t>(r)], true);
  return d;
}

// Scan rank for LLLP: (laxity asc, B desc, id asc).
bool lllp_before(const SystemState& s, int a, int b) {
  const auto& ca = s.chargers[static_cast<std::size_t>(a)];
  const auto& cb = s.chargers[static_cast<std::size_t>(b)];
  if (ca.laxity() != cb.laxity()) return ca.laxity() < cb.laxity();
  if (ca.demand != cb.demand) return ca.demand > cb.demand;
  return a < b;
}

bool dominates(const ChargerState& i, const ChargerState& k) {
  const bool weak = i.laxity() <= k.laxity() && i.demand >= k.demand;
  const bool strict = i.laxity() < k.laxity() || i.demand > k.demand;
  return weak && strict;
}

}  // namespace

PolicyDecision whittle_policy(const SystemState& s, const IndexTable& table, int capacity) {
  const int n = static_cast<int>(s.chargers.size());
  PolicyDecision d;
  d.action = ActionVector(n);
  d.priority.assign(static_cast<std::size_t>(n), kNaN);
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    const auto& c = s.chargers[static_cast<std::size_t>(i)];
    if (!chargeable(c)) continue;
    const double nu = table(c.lead, c.demand, s.cost_state, s.period);
    d.priority[static_cast<std::size_t>(i)] = nu;
    // A dummy arm (index 0) wins every tie at zero.
    if (nu > 0.0) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ka = d.priority[static_cast<std::size_t>(a)];
    const double kb = d.priority[static_cast<std::size_t>(b)];
    if (ka != kb) return ka > kb;
    const int ba = s.chargers[static_cast<std::size_t>(a)].demand;
    const int bb = s.chargers[static_cast<std::size_t>(b)].demand;
    if (ba != bb) return ba > bb;
    return a < b;
  });
  const int take = std::min<int>(capacity, static_cast<int>(order.size()));
  for (int r = 0; r < take; ++r) d.action.set(order[static_cast<std::size_t>(r)], true);
  return d;
}

ActionVector lllp_interchange(const SystemState& s, const ActionVector& a, int* swaps) {
  const int n = static_cast<int>(s.chargers.size());
  if (a.size() != n) throw std::invalid_argument("lllp: action size does not match the state");
  ActionVector out = a;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return lllp_before(s, x, y); });
  int count = 0;
  // Each swap lowers sum(laxity - B) over the active set, so this ends.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i : order) {
      const auto& ci = s.chargers[static_cast<std::size_t>(i)];
      if (out[i] || !chargeable(ci)) continue;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int k = *it;
        if (!out[k] || !dominates(ci, s.chargers[static_cast<std::size_t>(k)])) continue;
        out.set(k, false);
        out.set(i, true);
        ++count;
        changed = true;
        break;
      }
      if (changed) break;
    }
  }
  if (swaps) *swaps = count;
  return out;
}

PolicyDecision edf_policy(const SystemState& s, int capacity) {
  return rank_and_activate(s, capacity, [](const ChargerState& c) { return double(c.lead); });
}

PolicyDecision llf_policy(const SystemState& s, int capacity) {
  return rank_and_activate(s, capacity, [](const ChargerState& c) { return double(c.laxity()); });
}

CostForecast::CostForecast(const Instance& instance, int horizon) : horizon_(horizon) {
  if (horizon < 0) throw std::invalid_argument("cost forecast: negative horizon");
  const int periods = instance.periods();
  const int k = instance.cost_states();
  table_.assign(static_cast<std::size_t>(periods), Eigen::MatrixXd(k, horizon + 1));
  for (auto& m : table_) m.col(0) = instance.cost.levels();
  // E_k(tau) = P^tau E_{k-1}(tau + 1).
  for (int step = 1; step <= horizon; ++step) {
    for (int tau = 0; tau < periods; ++tau) {
      const int next = (tau + 1) % periods;
      table_[static_cast<std::size_t>(tau)].col(step) =
          instance.cost.transition(tau) * table_[static_cast<std::size_t>(next)].col(step - 1);
    }
  }
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "whittle") return PolicyKind::whittle;
  if (name == "whittle+lllp") return PolicyKind::whittle_lllp;
  if (name == "edf") return PolicyKind::edf;
  if (name == "llf") return PolicyKind::llf;
  if (name == "valley") return PolicyKind::valley;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::whittle: return "whittle";
    case PolicyKind::whittle_lllp: return "whittle+lllp";
    case PolicyKind::edf: return "edf";
    case PolicyKind::llf: return "llf";
    case PolicyKind::valley: return "valley";
  }
  return "?";
}

Scheduler::Scheduler(const Instance& instance, PolicyKind kind,
                     std::shared_ptr<const IndexTable> table)
    : instance_(instance), kind_(kind), table_(std::move(table)) {
  instance_.validate();
  const bool needs_table = kind == PolicyKind::whittle || kind == PolicyKind::whittle_lllp;
  if (needs_table && !table_) {
    table_ = std::make_shared<const IndexTable>(compute_index_table(instance_));
  }
  if (kind == PolicyKind::valley) forecast_ = CostForecast(instance_, instance_.max_lead);
}

PolicyDecision Scheduler::decide(const SystemState& s) const {
  switch (kind_) {
    case PolicyKind::whittle:
      return whittle_policy(s, *table_, instance_.capacity);
    case PolicyKind::whittle_lllp: {
      auto d = whittle_policy(s, *table_, instance_.capacity);
      d.action = lllp_interchange(s, d.action, &d.interchanges);
      return d;
    }
    case PolicyKind::edf:
      return edf_policy(s, instance_.capacity);
    case PolicyKind::llf:
      return llf_policy(s, instance_.capacity);
    case PolicyKind::valley:
      return valley_filling_policy(s, instance_, forecast_);
  }
  throw std::logic_error("scheduler: unhandled policy");
}

}  // namespace evsched
