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

#include "evsched/bound.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace evsched {

ChargerMdp build_charger_mdp(const Instance& instance) {
  instance.validate();
  const ExtendedStateSpace space(instance);
  ChargerMdp mdp;
  mdp.states = space.size();
  mdp.reward.resize(static_cast<std::size_t>(mdp.states));
  mdp.next.resize(static_cast<std::size_t>(mdp.states));
  for (int tau = 0; tau < instance.periods(); ++tau) {
    const auto& p = instance.cost.transition(tau);
    const int nt = space.next_period(tau);
    for (int j = 0; j < instance.cost_states(); ++j) {
      for (int l = 0; l < space.local_count(); ++l) {
        const ChargerState s = space.local_state(l);
        const auto idx = static_cast<std::size_t>(space.index(s, j, tau));
        for (int a = 0; a < 2; ++a) {
          mdp.reward[idx][static_cast<std::size_t>(a)] =
              reward(s, instance.cost.level(j), a == 1, instance.penalty);
          auto& out = mdp.next[idx][static_cast<std::size_t>(a)];
          for (const auto& [s2, q] : successor_distribution(s, a == 1, tau, instance.arrivals)) {
            for (int k = 0; k < instance.cost_states(); ++k) {
              if (p(j, k) > 0.0) out.emplace_back(space.index(s2, k, nt), q * p(j, k));
            }
          }
        }
      }
    }
  }
  return mdp;
}

Eigen::VectorXd initial_distribution(const Instance& instance) {
  const ExtendedStateSpace space(instance);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(space.size());
  const Eigen::VectorXd pi = instance.initial_cost_distribution();
  for (int j = 0; j < instance.cost_states(); ++j) mu(space.index({}, j, 0)) = pi(j);
  return mu;
}

Eigen::VectorXd evaluate_charger_policy(const ChargerMdp& mdp, const std::vector<int>& action,
                                        double discount,
                                        const std::vector<std::array<double, 2>>& reward) {
  const int n = mdp.states;
  if (static_cast<int>(action.size()) != n || static_cast<int>(reward.size()) != n) {
    throw std::invalid_argument("evaluate_charger_policy: size mismatch");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n);
  for (int s = 0; s < n; ++s) {
    const auto act = static_cast<std::size_t>(action[static_cast<std::size_t>(s)]);
    r(s) = reward[static_cast<std::size_t>(s)][act];
    for (const auto& [s2, q] : mdp.next[static_cast<std::size_t>(s)][act]) a(s, s2) -= discount * q;
  }
  return a.partialPivLu().solve(r);
}

// ---------------------------------------------------------------------------
// LagrangianSolver

LagrangianSolver::LagrangianSolver(const Instance& instance) : instance_(instance) {
  instance_.validate();
  const int k_count = instance_.cost_states();
  const int periods = instance_.periods();
  const double beta = instance_.discount;
  contexts_ = k_count * periods;
  auto ctx = [k_count](int j, int tau) { return tau * k_count + j; };

  // Phi_1 = beta I; Phi_T(j,tau) = beta sum_k P^tau_jk Phi_{T-1}(k,tau+1).
  phi_.reserve(static_cast<std::size_t>(instance_.max_lead));
  phi_.push_back(beta * Eigen::MatrixXd::Identity(contexts_, contexts_));
  for (int t = 2; t <= instance_.max_lead; ++t) {
    const auto& prev = phi_.back();
    Eigen::MatrixXd cur = Eigen::MatrixXd::Zero(contexts_, contexts_);
    for (int tau = 0; tau < periods; ++tau) {
      const int nt = (tau + 1) % periods;
      const auto& p = instance_.cost.transition(tau);
      for (int j = 0; j < k_count; ++j) {
        for (int k = 0; k < k_count; ++k) {
          if (p(j, k) != 0.0) cur.row(ctx(j, tau)) += beta * p(j, k) * prev.row(ctx(k, nt));
        }
      }
    }
    phi_.push_back(std::move(cur));
  }

  // U = a + G U.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(contexts_, contexts_);
  for (int tau = 0; tau < periods; ++tau) {
    const int nt = (tau + 1) % periods;
    const double rho = instance_.arrivals.rate(tau);
    const auto& p = instance_.cost.transition(tau);
    for (int j = 0; j < k_count; ++j) {
      for (int k = 0; k < k_count; ++k) {
        if (p(j, k) == 0.0) continue;
        g(ctx(j, tau), ctx(k, nt)) += p(j, k) * (1.0 - rho) * beta;
        for (const auto& m : instance_.arrivals.types(tau)) {
          if (m.probability == 0.0) continue;
          g.row(ctx(j, tau)) +=
              p(j, k) * rho * m.probability *
              phi_[static_cast<std::size_t>(m.state.lead - 1)].row(ctx(k, nt));
        }
      }
    }
  }
  system_.compute(Eigen::MatrixXd::Identity(contexts_, contexts_) - g);
  mu0_ = initial_distribution(instance_);
}

std::size_t LagrangianSolver::slot(int lead, int demand, int cost_state, int period) const {
  return static_cast<std::size_t>(
      (((lead - 1) * instance_.periods() + period) * instance_.cost_states() + cost_state) *
          (instance_.max_demand + 1) +
      demand);
}

LagrangianSolver::Pass LagrangianSolver::backward(double lambda) const {
  const int k_count = instance_.cost_states();
  const int periods = instance_.periods();
  const int bmax = instance_.max_demand;
  const double beta = instance_.discount;
  const auto& F = instance_.penalty;
  Pass pass;
  const std::size_t n =
      static_cast<std::size_t>(instance_.max_lead * periods * k_count * (bmax + 1));
  pass.in_stay.assign(n, 0.0);
  pass.activity.assign(n, 0.0);
  pass.act.assign(n, 0);
  for (int t = 1; t <= instance_.max_lead; ++t) {
    for (int tau = 0; tau < periods; ++tau) {
      const int nt = (tau + 1) % periods;
      const auto& p = instance_.cost.transition(tau);
      for (int j = 0; j < k_count; ++j) {
        const double margin = 1.0 - instance_.cost.level(j);
        for (int b = 0; b <= bmax; ++b) {
          double q_passive;
          double q_active;
          double f_passive = 0.0;
          double f_active = 1.0;
          if (t == 1) {
            q_passive = b > 0 ? -F(b) : 0.0;
            q_active = (b > 0 ? margin - F(b - 1) : 0.0) - lambda;
          } else {
            const int b_active = b > 0 ? b - 1 : 0;
            double e_passive = 0.0;
            double e_active = 0.0;
            for (int k = 0; k < k_count; ++k) {
              const double pk = p(j, k);
              if (pk == 0.0) continue;
              e_passive += pk * pass.in_stay[slot(t - 1, b, k, nt)];
              e_active += pk * pass.in_stay[slot(t - 1, b_active, k, nt)];
              f_passive += pk * pass.activity[slot(t - 1, b, k, nt)];
              f_active += beta * pk * pass.activity[slot(t - 1, b_active, k, nt)];
            }
            f_passive *= beta;
            q_passive = beta * e_passive;
            q_active = (b > 0 ? margin : 0.0) - lambda + beta * e_active;
          }
          const std::size_t s = slot(t, b, j, tau);
          const bool active = q_active > q_passive;
          pass.act[s] = active ? 1 : 0;
          pass.in_stay[s] = active ? q_active : q_passive;
          pass.activity[s] = active ? f_active : f_passive;
        }
      }
    }
  }
  return pass;
}

Eigen::VectorXd LagrangianSolver::post_departure(const std::vector<double>& in_stay) const {
  const int k_count = instance_.cost_states();
  const int periods = instance_.periods();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(contexts_);
  for (int tau = 0; tau < periods; ++tau) {
    const int nt = (tau + 1) % periods;
    const double rho = instance_.arrivals.rate(tau);
    if (rho == 0.0) continue;
    const auto& p = instance_.cost.transition(tau);
    for (int j = 0; j < k_count; ++j) {
      double sum = 0.0;
      for (int k = 0; k < k_count; ++k) {
        if (p(j, k) == 0.0) continue;
        double arrive = 0.0;
        for (const auto& m : instance_.arrivals.types(tau)) {
          arrive += m.probability * in_stay[slot(m.state.lead, m.state.demand, k, nt)];
        }
        sum += p(j, k) * arrive;
      }
      a(tau * k_count + j) = rho * sum;
    }
  }
  return system_.solve(a);
}

Eigen::VectorXd LagrangianSolver::assemble(const std::vector<double>& in_stay) const {
  const ExtendedStateSpace space(instance_);
  const Eigen::VectorXd u = post_departure(in_stay);
  const double beta = instance_.discount;
  Eigen::VectorXd v(space.size());
  const int k_count = instance_.cost_states();
  for (int tau = 0; tau < instance_.periods(); ++tau) {
    for (int j = 0; j < k_count; ++j) {
      const int c = tau * k_count + j;
      v(space.index({}, j, tau)) = beta * u(c);
      for (int t = 1; t <= instance_.max_lead; ++t) {
        const double cont = phi_[static_cast<std::size_t>(t - 1)].row(c).dot(u);
        for (int b = 0; b <= instance_.max_demand; ++b) {
          v(space.index({t, b}, j, tau)) = in_stay[slot(t, b, j, tau)] + cont;
        }
      }
    }
  }
  return v;
}

Eigen::VectorXd LagrangianSolver::values(double lambda) const {
  const Pass pass = backward(lambda);
  return assemble(pass.in_stay);
}

std::vector<int> LagrangianSolver::policy(double lambda) const {
  const Pass pass = backward(lambda);
  const ExtendedStateSpace space(instance_);
  std::vector<int> out(static_cast<std::size_t>(space.size()), 0);
  for (int tau = 0; tau < instance_.periods(); ++tau)
    for (int j = 0; j < instance_.cost_states(); ++j)
      for (int t = 1; t <= instance_.max_lead; ++t)
        for (int b = 0; b <= instance_.max_demand; ++b)
          out[static_cast<std::size_t>(space.index({t, b}, j, tau))] = pass.act[slot(t, b, j, tau)];
  return out;
}

LagrangianSolver::Point LagrangianSolver::evaluate(double lambda) const {
  const Pass pass = backward(lambda);
  const double beta = instance_.discount;
  Point pt;
  pt.lambda = lambda;
  pt.value = mu0_.dot(assemble(pass.in_stay));
  pt.activation_frequency = (1.0 - beta) * mu0_.dot(assemble(pass.activity));
  const double budget = static_cast<double>(instance_.capacity) / instance_.chargers;
  pt.dual = pt.value + lambda * budget / (1.0 - beta);
  return pt;
}

double LagrangianSolver::lambda_max() const {
  const double c_min = instance_.cost.levels().minCoeff();
  return std::max(0.0, 1.0 - c_min) + instance_.penalty.max_increment();
}

// ---------------------------------------------------------------------------

BoundResult solve_bound(const Instance& instance) {
  const LagrangianSolver solver(instance);
  const double beta = instance.discount;
  const double budget = static_cast<double>(instance.capacity) / instance.chargers;
  BoundResult out;
  out.method = "lagrangian-dual";
  auto eval = [&](double lambda) {
    ++out.evaluations;
    return solver.evaluate(lambda);
  };
  LagrangianSolver::Point best = eval(0.0);
  auto keep = [&best](const LagrangianSolver::Point& p) {
    if (p.dual < best.dual) best = p;
  };

  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = solver.lambda_max();
  LagrangianSolver::Point lo_pt = best;
  LagrangianSolver::Point hi_pt = eval(hi);
  keep(hi_pt);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  auto p1 = eval(x1);
  auto p2 = eval(x2);
  while (hi - lo > 1e-11 * std::max(1.0, hi)) {
    if (p1.dual <= p2.dual) {
      hi = x2;
      hi_pt = p2;
      x2 = x1;
      p2 = p1;
      x1 = hi - kInvPhi * (hi - lo);
      p1 = eval(x1);
    } else {
      lo = x1;
      lo_pt = p1;
      x1 = x2;
      p1 = p2;
      x2 = lo + kInvPhi * (hi - lo);
      p2 = eval(x2);
    }
    keep(p1);
    keep(p2);
  }
  keep(lo_pt);
  keep(hi_pt);
  // Supporting lines at both ends of the final bracket meet at the kink.
  const double s_lo = (budget - lo_pt.activation_frequency) / (1.0 - beta);
  const double s_hi = (budget - hi_pt.activation_frequency) / (1.0 - beta);
  if (s_lo < 0.0 && s_hi > 0.0) {
    const double x = (hi_pt.dual - lo_pt.dual + s_lo * lo_pt.lambda - s_hi * hi_pt.lambda) /
                     (s_lo - s_hi);
    if (x > lo_pt.lambda && x < hi_pt.lambda) keep(eval(x));
  }
  out.per_charger = best.dual;
  out.bound = instance.chargers * best.dual;
  out.lambda = best.lambda;
  out.activation_frequency = best.activation_frequency;
  return out;
}

// ---------------------------------------------------------------------------
// Occupancy LP

OccupancyLP build_occupancy_lp(const Instance& instance, const Eigen::VectorXd& mu0) {
  const ChargerMdp mdp = build_charger_mdp(instance);
  const int n = mdp.states;
  if (mu0.size() != n) throw std::invalid_argument("occupancy LP: mu0 has the wrong size");
  if ((mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("occupancy LP: mu0 must be a probability distribution");
  }
  const double beta = instance.discount;
  OccupancyLP out;
  out.states = n;
  out.scale = 1.0 / (1.0 - beta);
  auto& lp = out.lp;
  lp.a = Eigen::MatrixXd::Zero(n + 1, 2 * n);
  lp.b = Eigen::VectorXd::Zero(n + 1);
  lp.c = Eigen::VectorXd::Zero(2 * n);
  lp.sense.assign(static_cast<std::size_t>(n), RowSense::equal);
  lp.sense.push_back(RowSense::less_equal);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 2; ++a) {
      const int col = OccupancyLP::column(s, a);
      lp.a(s, col) += 1.0;
      for (const auto& [s2, q] : mdp.next[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
        lp.a(s2, col) -= beta * q;
      }
      lp.c(col) = mdp.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    }
    lp.b(s) = (1.0 - beta) * mu0(s);
    lp.a(n, OccupancyLP::column(s, 1)) = 1.0;
  }
  lp.b(n) = static_cast<double>(instance.capacity) / instance.chargers;
  return out;
}

BoundResult solve_bound_lp(const Instance& instance) {
  const OccupancyLP occ = build_occupancy_lp(instance, initial_distribution(instance));
  const LpSolution sol = solve_lp(occ.lp);
  if (sol.status != LpStatus::optimal) {
    throw std::runtime_error("occupancy LP: solver did not reach an optimum");
  }
  BoundResult out;
  out.method = "occupancy-lp";
  out.per_charger = occ.scale * sol.objective;
  out.bound = instance.chargers * out.per_charger;
  for (int s = 0; s < occ.states; ++s) out.activation_frequency += sol.x(OccupancyLP::column(s, 1));
  out.evaluations = sol.pivots;
  return out;
}

void write_bound_json(const BoundResult& result, std::ostream& os) {
  const nlohmann::json doc = {{"bound", result.bound},
                              {"per_charger", result.per_charger},
                              {"lambda", result.lambda},
                              {"activation_frequency", result.activation_frequency},
                              {"evaluations", result.evaluations},
                              {"method", result.method}};
  os << doc.dump(1) << '\n';
}

}  // namespace evsched
