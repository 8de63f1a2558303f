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

#include <json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace evsched {
namespace {

enum StreamTag : std::uint32_t { kArrivalTag = 1, kTypeTag = 2, kCostTag = 3 };

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag, std::uint32_t charger) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                    charger};
  return std::mt19937_64(seq);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EpisodeNoise::EpisodeNoise(std::uint64_t seed, int chargers) : cost_(stream(seed, kCostTag, 0)) {
  arrival_.reserve(static_cast<std::size_t>(chargers));
  type_.reserve(static_cast<std::size_t>(chargers));
  for (int i = 0; i < chargers; ++i) {
    arrival_.push_back(stream(seed, kArrivalTag, static_cast<std::uint32_t>(i)));
    type_.push_back(stream(seed, kTypeTag, static_cast<std::uint32_t>(i)));
  }
}

int default_horizon(const Instance& instance, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("horizon: rel_tol in (0,1)");
  const double scale = 1.0 + instance.penalty(instance.max_demand);
  return std::max(1, static_cast<int>(std::ceil(std::log(rel_tol / scale) /
                                                std::log(instance.discount))));
}

EpisodeMetrics run_episode(const Instance& instance, const Scheduler& policy, std::uint64_t seed,
                           int horizon) {
  if (horizon < 1) throw std::invalid_argument("run_episode: horizon must be >= 1");
  EpisodeNoise noise(seed, instance.chargers);
  const Eigen::VectorXd mu = instance.initial_cost_distribution();
  const double u0 = noise.cost_uniform();
  int j0 = 0;
  for (double acc = 0.0; j0 < mu.size() - 1; ++j0) {
    acc += mu(j0);
    if (u0 < acc) break;
  }
  SystemState s = empty_system(instance, j0);

  EpisodeMetrics m;
  m.seed = seed;
  m.policy = policy.name();
  m.horizon = horizon;
  double weight = 1.0;
  long long activations = 0;
  for (int t = 0; t < horizon; ++t) {
    const PolicyDecision d = policy.decide(s);
    m.interchanges += d.interchanges;
    activations += d.action.count();
    StepOutcome out = system_step(instance, s, d.action, noise);
    m.revenue += weight * out.revenue;
    m.energy_cost += weight * out.energy_cost;
    m.penalty += weight * out.penalty;
    m.reward += weight * out.reward;
    m.energy_delivered += out.revenue;
    m.penalties_paid += out.penalty;
    m.departures += out.departures;
    m.completed += out.completed;
    weight *= instance.discount;
    s = std::move(out.next);
  }
  m.completion_fraction = m.departures > 0 ? static_cast<double>(m.completed) / m.departures : 1.0;
  m.activations_per_slot = static_cast<double>(activations) / horizon;
  return m;
}

MeanInterval mean_interval(const std::vector<double>& samples, double level) {
  if (samples.size() < 2) throw std::invalid_argument("mean_interval: need at least 2 samples");
  MeanInterval out;
  out.n = static_cast<int>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / out.n;
  double ss = 0.0;
  for (double v : samples) ss += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(ss / (out.n - 1));
  const boost::math::students_t dist(out.n - 1);
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * level);
  out.half_width = q * out.stddev / std::sqrt(static_cast<double>(out.n));
  return out;
}

namespace {

// One sample has no spread estimate; the interval is reported as NaN.
MeanInterval summarize(const std::vector<double>& samples, double level) {
  if (samples.size() >= 2) return mean_interval(samples, level);
  MeanInterval out;
  out.n = static_cast<int>(samples.size());
  out.mean = samples.empty() ? std::nan("") : samples.front();
  out.half_width = std::nan("");
  out.stddev = std::nan("");
  return out;
}

}  // namespace

int ComparisonReport::policy_position(const std::string& name) const {
  const auto it = std::find(policies.begin(), policies.end(), name);
  if (it == policies.end()) throw std::invalid_argument("report: no policy '" + name + "'");
  return static_cast<int>(it - policies.begin());
}

const MeanInterval& ComparisonReport::reward_of(const std::string& name) const {
  return reward[static_cast<std::size_t>(policy_position(name))];
}

MeanInterval ComparisonReport::paired_difference(const std::string& a, const std::string& b,
                                                 double level) const {
  const auto& ra = runs[static_cast<std::size_t>(policy_position(a))];
  const auto& rb = runs[static_cast<std::size_t>(policy_position(b))];
  std::vector<double> diff(ra.size());
  for (std::size_t i = 0; i < ra.size(); ++i) diff[i] = ra[i].reward - rb[i].reward;
  return summarize(diff, level);
}

ComparisonReport monte_carlo(const Instance& instance, const std::vector<Scheduler>& policies,
                             const std::vector<std::uint64_t>& seeds,
                             const MonteCarloOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("monte_carlo: no seeds");
  if (policies.empty()) throw std::invalid_argument("monte_carlo: no policies");
  const int horizon = options.horizon > 0 ? options.horizon : default_horizon(instance);
  ComparisonReport report;
  report.seeds = seeds;
  for (const auto& p : policies) report.policies.push_back(p.name());
  if (options.baseline &&
      std::find(report.policies.begin(), report.policies.end(), *options.baseline) ==
          report.policies.end()) {
    throw std::invalid_argument("monte_carlo: baseline '" + *options.baseline +
                                "' is not among the policies");
  }
  const std::size_t n_jobs = policies.size() * seeds.size();
  std::vector<EpisodeMetrics> flat(n_jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      try {
        flat[job] = run_episode(instance, policies[job / seeds.size()],
                                seeds[job % seeds.size()], horizon);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t p = 0; p < policies.size(); ++p) {
    report.runs.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(p * seeds.size()),
                             flat.begin() + static_cast<std::ptrdiff_t>((p + 1) * seeds.size()));
    std::vector<double> r;
    for (const auto& m : report.runs.back()) r.push_back(m.reward);
    report.reward.push_back(summarize(r, options.level));
  }
  if (options.baseline) {
    for (const auto& name : report.policies) {
      if (name == *options.baseline) continue;
      report.paired.push_back(
          {name, *options.baseline, report.paired_difference(name, *options.baseline, options.level)});
    }
  }
  return report;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

void write_episodes_csv(const ComparisonReport& report, std::ostream& os) {
  os << "policy,seed,horizon,discounted_reward,revenue,energy_cost,penalty,energy_delivered,"
        "penalties_paid,departures,completed,completion_fraction,activations_per_slot,"
        "interchanges\n";
  for (const auto& runs : report.runs) {
    for (const auto& m : runs) {
      os << m.policy << ',' << m.seed << ',' << m.horizon << ',' << fmt(m.reward) << ','
         << fmt(m.revenue) << ',' << fmt(m.energy_cost) << ',' << fmt(m.penalty) << ','
         << fmt(m.energy_delivered) << ',' << fmt(m.penalties_paid) << ',' << m.departures << ','
         << m.completed << ',' << fmt(m.completion_fraction) << ','
         << fmt(m.activations_per_slot) << ',' << m.interchanges << '\n';
    }
  }
}

void write_report_json(const ComparisonReport& report, std::ostream& os) {
  auto interval = [](const MeanInterval& m) {
    return nlohmann::json{{"mean", m.mean}, {"ci95_half_width", m.half_width},
                          {"stddev", m.stddev}, {"n", m.n}};
  };
  nlohmann::json doc;
  doc["seeds"] = report.seeds.size();
  nlohmann::json pols = nlohmann::json::array();
  for (std::size_t p = 0; p < report.policies.size(); ++p) {
    long long swaps = 0;
    double completion = 0.0;
    for (const auto& m : report.runs[p]) {
      swaps += m.interchanges;
      completion += m.completion_fraction;
    }
    pols.push_back({{"policy", report.policies[p]},
                    {"reward", interval(report.reward[p])},
                    {"mean_completion_fraction", completion / report.runs[p].size()},
                    {"interchanges", swaps}});
  }
  doc["policies"] = std::move(pols);
  nlohmann::json paired = nlohmann::json::array();
  for (const auto& d : report.paired) {
    paired.push_back(
        {{"policy", d.policy}, {"baseline", d.baseline}, {"difference", interval(d.difference)}});
  }
  doc["paired"] = std::move(paired);
  os << doc.dump(1) << '\n';
}

void write_plot_csv(const ComparisonReport& report, const Instance& instance, std::ostream& os,
                    std::optional<double> bound) {
  const double n = instance.chargers;
  const double x = instance.capacity / n;
  os << "series,m_over_n,chargers,reward_per_charger,ci95_half_width\n";
  for (std::size_t p = 0; p < report.policies.size(); ++p) {
    os << report.policies[p] << ',' << fmt(x) << ',' << instance.chargers << ','
       << fmt(report.reward[p].mean / n) << ',' << fmt(report.reward[p].half_width / n) << '\n';
  }
  if (bound) os << "bound," << fmt(x) << ',' << instance.chargers << ',' << fmt(*bound / n) << ",0\n";
}

}  // namespace evsched
