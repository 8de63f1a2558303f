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

// Instances shared by the unit and acceptance tests.

#pragma once

#include "evsched/model.hpp"

#include <random>

namespace evsched::testing {

/// Constant cost c0, F = kappa B^2, uniform feasible arrivals.
inline Instance constant_cost_instance(double c0 = 0.5, double beta = 0.999, int max_lead = 12,
                                       int max_demand = 9, double rho = 0.7, int chargers = 10,
                                       int capacity = 5) {
  Instance in;
  in.chargers = chargers;
  in.capacity = capacity;
  in.discount = beta;
  in.max_lead = max_lead;
  in.max_demand = max_demand;
  in.penalty = PenaltyFunction::quadratic(0.2, max_demand);
  in.arrivals = ArrivalModel::uniform_feasible(rho, max_lead, max_demand);
  in.cost = CostChain::constant(c0);
  return in;
}

/// Two cost states {0.2, 0.8}, P = [[0.9,0.1],[0.5,0.5]], F = 0.2 B^2.
/// With periods = 2 the second period uses a different matrix and arrival rate.
inline Instance two_state_instance(int periods = 1, double beta = 0.9, int max_lead = 4,
                                   int max_demand = 3) {
  Instance in;
  in.chargers = 2;
  in.capacity = 1;
  in.discount = beta;
  in.max_lead = max_lead;
  in.max_demand = max_demand;
  in.penalty = PenaltyFunction::quadratic(0.2, max_demand);
  Eigen::Vector2d levels(0.2, 0.8);
  Eigen::Matrix2d p0;
  p0 << 0.9, 0.1, 0.5, 0.5;
  if (periods == 1) {
    in.arrivals = ArrivalModel::uniform_feasible(0.7, max_lead, max_demand);
    in.cost = CostChain(levels, p0);
  } else {
    Eigen::Matrix2d p1;
    p1 << 0.3, 0.7, 0.6, 0.4;
    std::vector<Eigen::MatrixXd> mats;
    for (int t = 0; t < periods; ++t) mats.push_back(t % 2 == 0 ? Eigen::MatrixXd(p0) : Eigen::MatrixXd(p1));
    auto base = ArrivalModel::uniform_feasible(0.7, max_lead, max_demand, periods);
    std::vector<double> rates;
    std::vector<std::vector<TypeMass>> types;
    for (int t = 0; t < periods; ++t) {
      rates.push_back(t % 2 == 0 ? 0.7 : 0.3);
      types.push_back(base.types(t));
    }
    in.arrivals = ArrivalModel(rates, types);
    in.cost = CostChain(levels, mats);
  }
  return in;
}

/// Small random instance: K in 1..3, periods in 1..2, random convex penalty,
/// random stochastic matrices, cost levels in [0, cost_max].
inline Instance random_instance(unsigned seed, double cost_max = 1.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance in;
  in.max_lead = pick(1, 5);
  in.max_demand = pick(1, 5);
  in.chargers = pick(1, 4);
  in.capacity = pick(0, in.chargers);
  in.discount = 0.5 + 0.45 * u(rng);
  std::vector<double> table{0.0};
  double inc = 0.05 + 0.3 * u(rng);
  for (int b = 1; b <= in.max_demand; ++b) {
    table.push_back(table.back() + inc);
    inc += 0.4 * u(rng);
  }
  in.penalty = PenaltyFunction(table);
  const int k = pick(1, 3);
  const int periods = pick(1, 2);
  Eigen::VectorXd levels(k);
  for (int j = 0; j < k; ++j) levels(j) = cost_max * u(rng);
  auto random_matrix = [&]() {
    Eigen::MatrixXd p(k, k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) p(r, c) = u(rng) < 0.25 ? 0.0 : u(rng);
      if (p.row(r).sum() == 0.0) p(r, r) = 1.0;
      p.row(r) /= p.row(r).sum();
    }
    return p;
  };
  const bool per_period = periods > 1 && u(rng) < 0.5;
  if (per_period) {
    std::vector<Eigen::MatrixXd> mats;
    for (int t = 0; t < periods; ++t) mats.push_back(random_matrix());
    in.cost = CostChain(levels, mats);
  } else {
    in.cost = CostChain(levels, random_matrix());
  }
  std::vector<double> rates;
  std::vector<std::vector<TypeMass>> types;
  for (int t = 0; t < periods; ++t) {
    rates.push_back(u(rng));
    std::vector<TypeMass> pmf;
    double total = 0.0;
    for (int tt = 1; tt <= in.max_lead; ++tt) {
      for (int b = 1; b <= in.max_demand; ++b) {
        const double w = u(rng) < 0.3 ? 0.0 : u(rng);
        if (w > 0.0) pmf.push_back({{tt, b}, w});
        total += w;
      }
    }
    if (pmf.empty()) {
      pmf.push_back({{1, 1}, 1.0});
      total = 1.0;
    }
    for (auto& m : pmf) m.probability /= total;
    // Renormalize exactly.
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pmf.size(); ++i) s += pmf[i].probability;
    pmf.back().probability = 1.0 - s;
    types.push_back(pmf);
  }
  in.arrivals = ArrivalModel(rates, types);
  in.validate();
  return in;
}

}  // namespace evsched::testing
