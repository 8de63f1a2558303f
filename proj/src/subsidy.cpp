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

// Subsidy-problem value iteration and the bisection oracle built on it.
// Deliberately a plain Bellman iteration over the full single-charger grid
// (arrival continuation included) so it shares nothing with the recursion.

#include "evsched/index.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace evsched {
namespace {

int vi_iterations(const Instance& instance, double subsidy, double tol) {
  const double beta = instance.discount;
  const double r_max = instance.max_slot_reward() + std::abs(subsidy);
  const double n = std::ceil(std::log(tol * (1.0 - beta) / r_max) / std::log(beta));
  return std::max(1, static_cast<int>(n));
}

}  // namespace

SubsidySolution subsidy_value_iteration(const Instance& instance, double subsidy, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("subsidy value iteration: tol must be > 0");
  instance.validate();
  const ExtendedStateSpace space(instance);
  const int n_states = space.size();
  const int k_count = instance.cost_states();
  const int periods = instance.periods();
  const int locals = space.local_count();
  const double beta = instance.discount;

  // Successor (charger) of every local state under each action.
  std::vector<int> next_passive(static_cast<std::size_t>(locals), -1);
  std::vector<int> next_active(static_cast<std::size_t>(locals), -1);
  for (int l = 0; l < locals; ++l) {
    const ChargerState s = space.local_state(l);
    if (s.lead > 1) {
      next_passive[static_cast<std::size_t>(l)] = space.local_index(advance_attached(s, false));
      next_active[static_cast<std::size_t>(l)] = space.local_index(advance_attached(s, true));
    }
  }

  SubsidySolution out;
  out.iterations = vi_iterations(instance, subsidy, tol);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_states);
  Eigen::VectorXd next(n_states);
  Eigen::VectorXd advantage(n_states);
  Eigen::MatrixXd inner(k_count, periods);     // arrival-slot value before the cost move
  Eigen::MatrixXd departure(k_count, periods); // W_{j,tau}

  for (int it = 0; it < out.iterations; ++it) {
    for (int tau = 0; tau < periods; ++tau) {
      const int nt = space.next_period(tau);
      const double rho = instance.arrivals.rate(tau);
      for (int k = 0; k < k_count; ++k) {
        double arrive = 0.0;
        for (const auto& m : instance.arrivals.types(tau)) {
          arrive += m.probability * v(space.index(m.state, k, nt));
        }
        inner(k, tau) = (1.0 - rho) * v(space.index({}, k, nt)) + rho * arrive;
      }
      departure.col(tau) = instance.cost.transition(tau) * inner.col(tau);
    }
    for (int tau = 0; tau < periods; ++tau) {
      const int nt = space.next_period(tau);
      const auto& p = instance.cost.transition(tau);
      for (int j = 0; j < k_count; ++j) {
        const double c = instance.cost.level(j);
        for (int l = 0; l < locals; ++l) {
          const ChargerState s = space.local_state(l);
          double cont_p;
          double cont_a;
          if (s.lead <= 1) {
            cont_p = cont_a = departure(j, tau);
          } else {
            cont_p = 0.0;
            cont_a = 0.0;
            const int lp = next_passive[static_cast<std::size_t>(l)];
            const int la = next_active[static_cast<std::size_t>(l)];
            const int base = (nt * k_count) * locals;
            for (int k = 0; k < k_count; ++k) {
              const double pk = p(j, k);
              if (pk == 0.0) continue;
              cont_p += pk * v(base + k * locals + lp);
              cont_a += pk * v(base + k * locals + la);
            }
          }
          const double q_passive = reward(s, c, false, instance.penalty) + subsidy + beta * cont_p;
          const double q_active = reward(s, c, true, instance.penalty) + beta * cont_a;
          const int idx = space.index(s, j, tau);
          next(idx) = std::max(q_passive, q_active);
          advantage(idx) = q_passive - q_active;
        }
      }
    }
    v.swap(next);
  }
  out.values = std::move(v);
  out.advantage = std::move(advantage);
  out.passive.resize(static_cast<std::size_t>(n_states));
  for (int i = 0; i < n_states; ++i) out.passive[static_cast<std::size_t>(i)] = out.advantage(i) >= 0.0;
  return out;
}

double subsidy_bracket(const Instance& instance) {
  return 1.0 + instance.cost.levels().cwiseAbs().maxCoeff() + instance.penalty.max_increment();
}

namespace {

// The advantage has slope >= 1 - beta in the subsidy, so a value error eps
// moves the sign change by at most 2 beta eps / (1 - beta).
double vi_tol_for(const Instance& instance, double tol) {
  const double beta = instance.discount;
  return tol * (1.0 - beta) / (8.0 * beta);
}

}  // namespace

IndexTable index_table_by_bisection(const Instance& instance, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection: tol must be > 0");
  const ExtendedStateSpace space(instance);
  const double half = subsidy_bracket(instance);
  const double vi_tol = vi_tol_for(instance, tol);

  struct Bracket {
    ExtendedState state;
    int idx;
    double lo;
    double hi;
  };
  std::vector<Bracket> open;
  for (int tau = 0; tau < instance.periods(); ++tau) {
    for (int j = 0; j < instance.cost_states(); ++j) {
      for (int t = 1; t <= instance.max_lead; ++t) {
        for (int b = 0; b <= instance.max_demand; ++b) {
          open.push_back({{t, b, j, tau}, space.index({t, b}, j, tau), -half, half});
        }
      }
    }
  }

  // Endpoint check: active below the bracket, passive above it.
  {
    const auto low = subsidy_value_iteration(instance, -half, vi_tol);
    const auto high = subsidy_value_iteration(instance, half, vi_tol);
    for (const auto& br : open) {
      const auto i = static_cast<std::size_t>(br.idx);
      if (low.passive[i] || !high.passive[i]) {
        throw std::runtime_error("bisection: optimal action does not flip across the bracket");
      }
    }
  }

  // States whose brackets coincide share the probe; brackets are dyadic, so
  // equal midpoints compare exactly. A bracket whose midpoint rounds onto an
  // end cannot shrink further and is closed regardless of tol.
  while (true) {
    std::map<double, std::vector<std::size_t>> probes;
    for (std::size_t i = 0; i < open.size(); ++i) {
      const double mid = 0.5 * (open[i].lo + open[i].hi);
      if (open[i].hi - open[i].lo > tol && mid != open[i].lo && mid != open[i].hi) {
        probes[mid].push_back(i);
      }
    }
    if (probes.empty()) break;
    for (const auto& [mid, members] : probes) {
      const auto sol = subsidy_value_iteration(instance, mid, vi_tol);
      for (std::size_t i : members) {
        if (sol.passive[static_cast<std::size_t>(open[i].idx)]) {
          open[i].hi = mid;
        } else {
          open[i].lo = mid;
        }
      }
    }
  }

  IndexTable table(instance.max_lead, instance.max_demand, instance.cost_states(),
                   instance.periods());
  for (const auto& br : open) {
    table.set(br.state.lead, br.state.demand, br.state.cost_state, br.state.period,
              0.5 * (br.lo + br.hi));
  }
  return table;
}

double index_by_bisection(const Instance& instance, const ExtendedState& state, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection: tol must be > 0");
  const ExtendedStateSpace space(instance);
  const auto idx = static_cast<std::size_t>(space.index({state.lead, state.demand},
                                                        state.cost_state, state.period));
  const double half = subsidy_bracket(instance);
  const double vi_tol = vi_tol_for(instance, tol);
  double lo = -half;
  double hi = half;
  if (subsidy_value_iteration(instance, lo, vi_tol).passive[idx] ||
      !subsidy_value_iteration(instance, hi, vi_tol).passive[idx]) {
    throw std::runtime_error("bisection: optimal action does not flip across the bracket");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (subsidy_value_iteration(instance, mid, vi_tol).passive[idx]) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

std::vector<std::vector<bool>> passive_sweep(const Instance& instance,
                                             const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("indexability: subsidy grid must be sorted");
  }
  std::vector<std::vector<bool>> out;
  out.reserve(grid.size());
  for (double nu : grid) out.push_back(subsidy_value_iteration(instance, nu, 1e-10).passive);
  return out;
}

bool monotone_at(const std::vector<std::vector<bool>>& sweep, std::size_t idx) {
  bool passive_seen = false;
  for (const auto& row : sweep) {
    if (row[idx]) {
      passive_seen = true;
    } else if (passive_seen) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool check_indexability(const Instance& instance, const ExtendedState& state,
                        const std::vector<double>& subsidy_grid) {
  const ExtendedStateSpace space(instance);
  const auto sweep = passive_sweep(instance, subsidy_grid);
  return monotone_at(sweep, static_cast<std::size_t>(space.index({state.lead, state.demand},
                                                                 state.cost_state, state.period)));
}

int count_indexability_violations(const Instance& instance,
                                  const std::vector<double>& subsidy_grid) {
  const ExtendedStateSpace space(instance);
  const auto sweep = passive_sweep(instance, subsidy_grid);
  int bad = 0;
  for (int i = 0; i < space.size(); ++i) {
    if (!monotone_at(sweep, static_cast<std::size_t>(i))) ++bad;
  }
  return bad;
}

}  // namespace evsched
