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

// Successive-shortest-path min-cost flow for small dense graphs.

#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

namespace evsched {

class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : head_(static_cast<std::size_t>(nodes), -1) {}

  /// Adds u -> v with the given capacity and unit cost; returns the arc id.
  int add_arc(int u, int v, int capacity, double cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({v, head_[static_cast<std::size_t>(u)], capacity, cost});
    head_[static_cast<std::size_t>(u)] = id;
    arcs_.push_back({u, head_[static_cast<std::size_t>(v)], 0, -cost});
    head_[static_cast<std::size_t>(v)] = id + 1;
    return id;
  }

  int flow(int arc) const { return arcs_[static_cast<std::size_t>(arc ^ 1)].capacity; }

  struct Result {
    int flow = 0;
    double cost = 0.0;
  };

  /// Sends flow from s to t along cheapest paths. With `stop_at_nonnegative`
  /// it stops once the cheapest path no longer has negative cost, which gives
  /// a min-cost flow of free amount. Negative arc costs are allowed; the graph
  /// must have no negative cycle.
  Result solve(int s, int t, int max_flow, bool stop_at_nonnegative) {
    const std::size_t n = head_.size();
    std::vector<double> potential(n, 0.0);
    bellman_ford(s, potential);
    Result out;
    std::vector<double> dist(n);
    std::vector<int> via(n);
    std::vector<char> done(n);
    while (out.flow < max_flow) {
      // Dense Dijkstra on reduced costs.
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(via.begin(), via.end(), -1);
      std::fill(done.begin(), done.end(), 0);
      dist[static_cast<std::size_t>(s)] = 0.0;
      for (std::size_t round = 0; round < n; ++round) {
        int u = -1;
        for (std::size_t v = 0; v < n; ++v) {
          if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[static_cast<std::size_t>(u)])) {
            u = static_cast<int>(v);
          }
        }
        if (u < 0) break;
        const auto uu = static_cast<std::size_t>(u);
        done[uu] = 1;
        for (int e = head_[uu]; e >= 0; e = arcs_[static_cast<std::size_t>(e)].next) {
          const Arc& a = arcs_[static_cast<std::size_t>(e)];
          if (a.capacity <= 0) continue;
          const auto v = static_cast<std::size_t>(a.to);
          const double nd = dist[uu] + a.cost + potential[uu] - potential[v];
          if (nd < dist[v] - kEps) {
            dist[v] = nd;
            via[v] = e;
          }
        }
      }
      const auto tt = static_cast<std::size_t>(t);
      if (dist[tt] >= kInf) break;
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] < kInf) potential[v] += dist[v];
      }
      const double path_cost = potential[tt] - potential[static_cast<std::size_t>(s)];
      if (stop_at_nonnegative && path_cost >= -kEps) break;
      int push = max_flow - out.flow;
      for (int v = t; v != s;) {
        const int e = via[static_cast<std::size_t>(v)];
        push = std::min(push, arcs_[static_cast<std::size_t>(e)].capacity);
        v = arcs_[static_cast<std::size_t>(e ^ 1)].to;
      }
      for (int v = t; v != s;) {
        const int e = via[static_cast<std::size_t>(v)];
        arcs_[static_cast<std::size_t>(e)].capacity -= push;
        arcs_[static_cast<std::size_t>(e ^ 1)].capacity += push;
        v = arcs_[static_cast<std::size_t>(e ^ 1)].to;
      }
      out.flow += push;
      out.cost += push * path_cost;
    }
    return out;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kEps = 1e-12;

  struct Arc {
    int to;
    int next;
    int capacity;
    double cost;
  };

  void bellman_ford(int s, std::vector<double>& dist) const {
    const std::size_t n = head_.size();
    std::fill(dist.begin(), dist.end(), kInf);
    dist[static_cast<std::size_t>(s)] = 0.0;
    for (std::size_t round = 0; round + 1 < n; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (dist[u] >= kInf) continue;
        for (int e = head_[u]; e >= 0; e = arcs_[static_cast<std::size_t>(e)].next) {
          const Arc& a = arcs_[static_cast<std::size_t>(e)];
          if (a.capacity > 0 && dist[u] + a.cost < dist[static_cast<std::size_t>(a.to)] - kEps) {
            dist[static_cast<std::size_t>(a.to)] = dist[u] + a.cost;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (auto& d : dist) {
      if (d >= kInf) d = 0.0;
    }
  }

  std::vector<int> head_;
  std::vector<Arc> arcs_;
};

}  // namespace evsched
