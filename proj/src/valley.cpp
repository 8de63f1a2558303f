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

#include "evsched/min_cost_flow.hpp"
#include "evsched/policies.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace evsched {

PolicyDecision valley_filling_policy(const SystemState& s, const Instance& instance,
                                     const CostForecast& forecast) {
  const int n = static_cast<int>(s.chargers.size());
  PolicyDecision d;
  d.action = ActionVector(n);
  d.priority.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());

  std::vector<int> evs;
  int horizon = 0;
  for (int i = 0; i < n; ++i) {
    const auto& c = s.chargers[static_cast<std::size_t>(i)];
    if (c.lead >= 1 && c.demand > 0) {
      evs.push_back(i);
      horizon = std::max(horizon, c.lead);
    }
  }
  if (evs.empty() || instance.capacity == 0) return d;
  if (horizon > forecast.horizon() + 1) {
    throw std::invalid_argument("valley filling: forecast horizon shorter than a lead time");
  }

  // Nodes: source, EVs, slots, sink. A unit of flow is one charged slot.
  // The u-th charged unit of EV i avoids penalty F(B-u+1) - F(B-u), which is
  // nonincreasing in u, so unit arcs out of the source are used in order.
  const int m = static_cast<int>(evs.size());
  const int source = 0;
  const int sink = 1 + m + horizon;
  MinCostFlow flow(sink + 1);
  std::vector<int> slot0_arc(static_cast<std::size_t>(m), -1);
  for (int e = 0; e < m; ++e) {
    const auto& c = s.chargers[static_cast<std::size_t>(evs[static_cast<std::size_t>(e)])];
    const int units = std::min(c.demand, c.lead);
    for (int u = 1; u <= units; ++u) {
      flow.add_arc(source, 1 + e, 1, -instance.penalty.increment(c.demand - u + 1));
    }
    for (int k = 0; k < c.lead; ++k) {
      const double profit = 1.0 - forecast.expected(k, s.cost_state, s.period);
      const int arc = flow.add_arc(1 + e, 1 + m + k, 1, -profit);
      if (k == 0) slot0_arc[static_cast<std::size_t>(e)] = arc;
    }
  }
  for (int k = 0; k < horizon; ++k) flow.add_arc(1 + m + k, sink, instance.capacity, 0.0);
  flow.solve(source, sink, std::numeric_limits<int>::max(), /*stop_at_nonnegative=*/true);

  for (int e = 0; e < m; ++e) {
    const int i = evs[static_cast<std::size_t>(e)];
    const int f = flow.flow(slot0_arc[static_cast<std::size_t>(e)]);
    d.priority[static_cast<std::size_t>(i)] = f;
    if (f > 0) d.action.set(i, true);
  }
  return d;
}

}  // namespace evsched
