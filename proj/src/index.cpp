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

#include "evsched/index.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace evsched {
namespace {

constexpr double kMonotoneTol = 1e-9;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double closed_form_index(int lead, int demand, double cost, double discount,
                         const PenaltyFunction& penalty) {
  if (demand <= 0 || lead <= 0) return 0.0;
  const double margin = 1.0 - cost;
  if (lead == 1) return margin + penalty.increment(demand);
  if (demand <= lead - 1) return margin;
  return margin + std::pow(discount, lead - 1) * penalty.increment(demand - lead + 1);
}

Pwl base_g(int h, int demand, double cost, const PenaltyFunction& penalty, int max_demand) {
  if (demand < 0 || h < 1 || h > max_demand - demand) {
    throw std::invalid_argument("base_g: need 1 <= h <= Bbar - B");
  }
  const auto& F = penalty;
  const double margin = 1.0 - cost;
  if (demand == 0) {
    const double idx = margin + F.increment(h);
    const double low = margin - F(h - 1);
    const double high = -F(h);
    if (idx > 0.0) return Pwl({0.0, idx}, {low, high}, 0.0, 0.0);
    if (idx < 0.0) return Pwl({idx, 0.0}, {low, high}, 0.0, 0.0);
    return Pwl::constant(high);
  }
  const double idx_b = margin + F.increment(demand);
  const double idx_bh = margin + F.increment(demand + h);
  const double low = F(demand - 1) - F(demand + h - 1);
  const double high = F(demand) - F(demand + h);
  if (idx_bh > idx_b) return Pwl({idx_b, idx_bh}, {low, high}, 0.0, 0.0);
  return Pwl::constant(high);
}

// ---------------------------------------------------------------------------
// IndexTable

IndexTable::IndexTable(int max_lead, int max_demand, int cost_states, int periods)
    : max_lead_(max_lead),
      max_demand_(max_demand),
      cost_states_(cost_states),
      periods_(periods),
      values_(static_cast<std::size_t>((max_lead + 1) * (max_demand + 1) * cost_states * periods),
              0.0) {}

std::size_t IndexTable::offset(int lead, int demand, int cost_state, int period) const {
  if (lead < 0 || lead > max_lead_ || demand < 0 || demand > max_demand_ || cost_state < 0 ||
      cost_state >= cost_states_ || period < 0 || period >= periods_) {
    throw std::out_of_range("index table: state outside the grid");
  }
  return static_cast<std::size_t>(
      ((period * cost_states_ + cost_state) * (max_lead_ + 1) + lead) * (max_demand_ + 1) + demand);
}

void IndexTable::write_csv(std::ostream& os) const {
  os << "T,B,cost_state,period,index\n";
  for (int tau = 0; tau < periods_; ++tau) {
    for (int j = 0; j < cost_states_; ++j) {
      for (int t = 1; t <= max_lead_; ++t) {
        for (int b = 0; b <= max_demand_; ++b) {
          os << t << ',' << b << ',' << j << ',' << tau << ',' << fmt_double((*this)(t, b, j, tau))
             << '\n';
        }
      }
    }
  }
}

IndexTable IndexTable::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("T,B,cost_state,period,index", 0) != 0) {
    throw std::runtime_error("index table CSV: missing header");
  }
  struct Row {
    int t, b, j, tau;
    double v;
  };
  std::vector<Row> rows;
  int mt = 0, mb = 0, mj = 0, mp = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Row r{};
    char c1, c2, c3, c4;
    std::istringstream ss(line);
    if (!(ss >> r.t >> c1 >> r.b >> c2 >> r.j >> c3 >> r.tau >> c4 >> r.v)) {
      throw std::runtime_error("index table CSV: malformed row '" + line + "'");
    }
    mt = std::max(mt, r.t);
    mb = std::max(mb, r.b);
    mj = std::max(mj, r.j);
    mp = std::max(mp, r.tau);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("index table CSV: no rows");
  IndexTable table(mt, mb, mj + 1, mp + 1);
  for (const auto& r : rows) table.set(r.t, r.b, r.j, r.tau, r.v);
  return table;
}

void IndexTable::write_json(std::ostream& os) const {
  nlohmann::json rows = nlohmann::json::array();
  for (int tau = 0; tau < periods_; ++tau) {
    for (int j = 0; j < cost_states_; ++j) {
      for (int t = 1; t <= max_lead_; ++t) {
        for (int b = 0; b <= max_demand_; ++b) {
          rows.push_back({{"T", t}, {"B", b}, {"cost_state", j}, {"period", tau},
                          {"index", (*this)(t, b, j, tau)}});
        }
      }
    }
  }
  nlohmann::json doc = {{"max_lead", max_lead_},     {"max_demand", max_demand_},
                        {"cost_states", cost_states_}, {"periods", periods_},
                        {"rows", std::move(rows)}};
  os << doc.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// IndexRecursion

IndexRecursion::IndexRecursion(const Instance& instance) : instance_(instance) {
  instance_.validate();
}

std::size_t IndexRecursion::slot(int demand, int cost_state, int period) const {
  return static_cast<std::size_t>(
      (period * instance_.cost_states() + cost_state) * (instance_.max_demand + 1) + demand);
}

const Pwl& IndexRecursion::value_difference(int demand, int cost_state, int period) const {
  if (level_ == 0) throw std::logic_error("index recursion: no level computed yet");
  return current_.at(slot(demand, cost_state, period));
}

Pwl IndexRecursion::g(int h, int demand, int cost_state, int period) const {
  if (h < 1 || demand + h > instance_.max_demand) {
    throw std::invalid_argument("g: need 1 <= h <= Bbar - B");
  }
  return value_difference(demand + h, cost_state, period) -
         value_difference(demand, cost_state, period);
}

double IndexRecursion::index(int demand, int cost_state, int period) const {
  if (level_ == 0) throw std::logic_error("index recursion: no level computed yet");
  return index_.at(slot(demand, cost_state, period));
}

Pwl IndexRecursion::expected_next(const std::vector<Pwl>& level, int demand, int cost_state,
                                  int period) const {
  if (demand == 0) return Pwl();
  const auto& p = instance_.cost.transition(period);
  const int next = (period + 1) % instance_.periods();
  Pwl sum;
  for (int k = 0; k < instance_.cost_states(); ++k) {
    if (p(cost_state, k) == 0.0) continue;
    sum += p(cost_state, k) * level[slot(demand, k, next)];
  }
  return sum;
}

Pwl IndexRecursion::activation_advantage(int demand, int cost_state, int period) const {
  if (level_ == 0 || demand < 1) {
    throw std::invalid_argument("activation advantage: need a computed level and B >= 1");
  }
  const double margin = 1.0 - instance_.cost.level(cost_state);
  if (level_ == 1) {
    return Pwl::affine(-margin - instance_.penalty.increment(demand), 1.0);
  }
  const double beta = instance_.discount;
  return Pwl::affine(-margin, 1.0) +
         beta * (expected_next(previous_, demand, cost_state, period) -
                 expected_next(previous_, demand - 1, cost_state, period));
}

void IndexRecursion::advance() {
  if (level_ >= instance_.max_lead) throw std::logic_error("index recursion: past Tbar");
  ++level_;
  const int bmax = instance_.max_demand;
  const int k_count = instance_.cost_states();
  const int periods = instance_.periods();
  const double beta = instance_.discount;
  const auto& F = instance_.penalty;
  const Pwl ramp = Pwl::hinge(0.0);

  previous_ = std::move(current_);
  current_.assign(static_cast<std::size_t>((bmax + 1) * k_count * periods), Pwl());
  index_.assign(current_.size(), 0.0);

  for (int tau = 0; tau < periods; ++tau) {
    for (int j = 0; j < k_count; ++j) {
      const double margin = 1.0 - instance_.cost.level(j);
      std::vector<Pwl> expected;
      if (level_ > 1) {
        expected.reserve(static_cast<std::size_t>(bmax + 1));
        for (int b = 0; b <= bmax; ++b) expected.push_back(expected_next(previous_, b, j, tau));
      }
      for (int b = 1; b <= bmax; ++b) {
        double idx;
        Pwl active;
        Pwl passive;
        if (level_ == 1) {
          idx = margin + F.increment(b);
          active = Pwl::constant(margin - F(b - 1));
          passive = Pwl::affine(-F(b), 1.0);
        } else {
          const auto& e_hi = expected[static_cast<std::size_t>(b)];
          const auto& e_lo = expected[static_cast<std::size_t>(b - 1)];
          const Pwl advantage = Pwl::affine(-margin, 1.0) + beta * (e_hi - e_lo);
          const double slope = advantage.min_slope();
          min_advantage_slope_ = std::min(min_advantage_slope_, slope);
          if (slope < -kMonotoneTol) {
            throw std::runtime_error("index recursion: activation advantage decreases at T=" +
                                     std::to_string(level_) + ", B=" + std::to_string(b));
          }
          idx = advantage.least_root();
          active = Pwl::constant(margin) + beta * e_lo;
          passive = Pwl::affine(0.0, 1.0) + beta * e_hi;
        }
        double gap = 0.0;
        Pwl d = Pwl::stitch(idx, active, passive, &gap) - ramp;
        d.simplify();
        max_stitch_gap_ = std::max(max_stitch_gap_, gap);
        current_[slot(b, j, tau)] = std::move(d);
        index_[slot(b, j, tau)] = idx;
      }
    }
  }
}

IndexTable compute_index_table(const Instance& instance) {
  IndexRecursion recursion(instance);
  IndexTable table(instance.max_lead, instance.max_demand, instance.cost_states(),
                   instance.periods());
  for (int t = 1; t <= instance.max_lead; ++t) {
    recursion.advance();
    for (int tau = 0; tau < instance.periods(); ++tau) {
      for (int j = 0; j < instance.cost_states(); ++j) {
        for (int b = 1; b <= instance.max_demand; ++b) {
          table.set(t, b, j, tau, recursion.index(b, j, tau));
        }
      }
    }
  }
  return table;
}

}  // namespace evsched
