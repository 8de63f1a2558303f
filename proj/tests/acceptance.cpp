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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Instances come from configs/ so that "configured" means
// what the command-line tool would run.

#include "evsched/bound.hpp"
#include "evsched/config.hpp"
#include "evsched/index.hpp"
#include "evsched/policies.hpp"
#include "evsched/sim.hpp"

#include "instances.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace evsched;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

RunConfig config(const std::string& file) { return load_run_config(fs::path(EVSCHED_CONFIG_DIR) / file); }

std::shared_ptr<const IndexTable> table_if_needed(const Instance& in,
                                                  const std::vector<std::string>& policies) {
  for (const auto& p : policies) {
    const PolicyKind k = parse_policy(p);
    if (k == PolicyKind::whittle || k == PolicyKind::whittle_lllp) {
      return std::make_shared<const IndexTable>(compute_index_table(in));
    }
  }
  return nullptr;
}

ComparisonReport simulate(const Instance& in, const std::vector<std::string>& names,
                          const std::vector<std::uint64_t>& seeds, int horizon,
                          std::shared_ptr<const IndexTable> table, int threads = 1) {
  std::vector<Scheduler> policies;
  for (const auto& p : names) policies.emplace_back(in, parse_policy(p), table);
  MonteCarloOptions mc;
  mc.horizon = horizon;
  mc.threads = threads;
  return monte_carlo(in, policies, seeds, mc);
}

// Lower end of a two-sided 95% interval.
double lower(const MeanInterval& m) { return m.mean - m.half_width; }

// Simulation results shared by several criteria.
struct Runs {
  std::map<std::string, ComparisonReport> by_key;  // "<config>@M"
  std::map<std::string, double> bound;             // same keys
  std::map<std::string, RunConfig> configs;
};

Runs& runs() {
  static Runs r;
  return r;
}

const ComparisonReport& configured_run(const std::string& file, int capacity) {
  Runs& r = runs();
  const std::string key = file + "@" + std::to_string(capacity);
  if (auto it = r.by_key.find(key); it != r.by_key.end()) return it->second;
  if (!r.configs.count(file)) r.configs.emplace(file, config(file));
  const RunConfig& cfg = r.configs.at(file);
  Instance in = cfg.instance;
  in.capacity = capacity;
  static std::map<std::string, std::shared_ptr<const IndexTable>> tables;
  if (!tables.count(file)) tables[file] = table_if_needed(in, cfg.policies);
  r.bound[key] = solve_bound(in).bound;
  return r.by_key
      .emplace(key, simulate(in, cfg.policies, seed_range(cfg.first_seed, cfg.seed_count),
                             cfg.horizon, tables[file]))
      .first->second;
}

// ---------------------------------------------------------------------------

Outcome closed_form_equivalence() {
  const Instance in = testing::constant_cost_instance(0.5, 0.999, 12, 9);
  const auto start = std::chrono::steady_clock::now();
  const IndexTable table = compute_index_table(in);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (int t = 1; t <= in.max_lead; ++t) {
    for (int b = 0; b <= in.max_demand; ++b) {
      const double ref = b == 0 ? 0.0 : closed_form_index(t, b, 0.5, in.discount, in.penalty);
      worst = std::max(worst, std::abs(table(t, b, 0, 0) - ref));
    }
  }
  return {worst < 1e-9 && seconds < 5.0,
          "max abs error " + num(worst, 3) + ", table built in " + num(seconds, 3) + " s"};
}

Outcome oracle_equivalence() {
  const Instance in = testing::two_state_instance(2, 0.9, 4, 3);
  const auto start = std::chrono::steady_clock::now();
  const IndexTable rec = compute_index_table(in);
  const IndexTable ref = index_table_by_bisection(in, 1e-8);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (int t = 1; t <= in.max_lead; ++t)
    for (int b = 0; b <= in.max_demand; ++b)
      for (int j = 0; j < in.cost_states(); ++j)
        for (int p = 0; p < in.periods(); ++p)
          worst = std::max(worst, std::abs(rec(t, b, j, p) - ref(t, b, j, p)));
  return {worst < 1e-6 && seconds < 60.0, "max abs difference " + num(worst, 3) + " over " +
                                              std::to_string(ExtendedStateSpace(in).size()) +
                                              " states, " + num(seconds, 3) + " s"};
}

Outcome indexability_and_propositions() {
  int not_indexable = 0;
  double prop1 = -1e300;  // worst nu(T,B) - nu(T,B+1), B >= T
  double prop3 = -1e300;  // worst second difference of V in B, B >= T
  long long pairs1 = 0;
  long long triples3 = 0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Instance in = testing::random_instance(1000 + seed);
    const double r = subsidy_bracket(in);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(-r + 2.0 * r * i / 40.0);
    not_indexable += count_indexability_violations(in, grid) > 0 ? 1 : 0;

    const IndexTable table = compute_index_table(in);
    for (int t = 1; t <= in.max_lead; ++t)
      for (int j = 0; j < in.cost_states(); ++j)
        for (int p = 0; p < in.periods(); ++p)
          for (int b = t; b < in.max_demand; ++b)
          {
            prop1 = std::max(prop1, table(t, b, j, p) - table(t, b + 1, j, p));
            ++pairs1;
          }

    const ExtendedStateSpace space(in);
    for (double nu : {-0.5 * r, 0.0, 0.25 * r, 0.5 * r}) {
      const SubsidySolution sol = subsidy_value_iteration(in, nu, 1e-11);
      auto v = [&](int t, int b, int j, int p) { return sol.values(space.index({t, b}, j, p)); };
      for (int t = 1; t <= in.max_lead; ++t)
        for (int j = 0; j < in.cost_states(); ++j)
          for (int p = 0; p < in.periods(); ++p)
            for (int b = t; b + 2 <= in.max_demand; ++b)
            {
              prop3 = std::max(prop3, v(t, b + 2, j, p) + v(t, b, j, p) - 2.0 * v(t, b + 1, j, p));
              ++triples3;
            }
    }
  }
  return {not_indexable == 0 && prop1 < 1e-9 && prop3 < 1e-9,
          std::to_string(20 - not_indexable) + "/20 indexable; worst monotonicity gap " +
              num(prop1, 3) + " over " + std::to_string(pairs1) + " pairs, worst second difference " +
              num(prop3, 3) + " over " + std::to_string(triples3) + " triples"};
}

Outcome equal_capacity_optimality() {
  const RunConfig cfg = config("dynamic_full_capacity.json");
  if (cfg.instance.capacity != cfg.instance.chargers) return {false, "full-capacity config must set M = N"};
  const auto& report = configured_run("dynamic_full_capacity.json", cfg.instance.capacity);
  const double bound = runs().bound.at("dynamic_full_capacity.json@" + std::to_string(cfg.instance.capacity));
  const MeanInterval& w = report.reward_of("whittle");
  long long swaps = 0;
  for (const auto& m : report.runs[static_cast<std::size_t>(report.policy_position("whittle+lllp"))])
    swaps += m.interchanges;
  const bool within = std::abs(w.mean - bound) <= w.half_width;
  return {within && swaps == 0 && w.n >= 200,
          "whittle " + num(w.mean, 7) + " +/- " + num(w.half_width, 4) + " vs bound " +
              num(bound, 7) + " (" + std::to_string(w.n) + " seeds); interchanges " +
              std::to_string(swaps)};
}

Outcome bound_dominance() {
  std::vector<std::pair<std::string, std::vector<int>>> plan;
  for (const char* file : {"constant_cost.json", "dynamic_full_capacity.json", "dynamic_half_capacity.json",
                           "toy.json", "small_dynamic.json"}) {
    const RunConfig cfg = config(file);
    std::vector<int> caps = cfg.capacity_sweep;
    if (caps.empty()) caps.push_back(cfg.instance.capacity);
    plan.emplace_back(file, caps);
  }
  int checked = 0;
  std::string violations;
  double worst_excess = -1e300;
  for (const auto& [file, caps] : plan) {
    for (int m : caps) {
      const auto& report = configured_run(file, m);
      const double bound = runs().bound.at(file + "@" + std::to_string(m));
      for (std::size_t p = 0; p < report.policies.size(); ++p) {
        const auto& r = report.reward[p];
        ++checked;
        worst_excess = std::max(worst_excess, r.mean - bound - r.half_width);
        if (r.mean > bound + r.half_width) violations += " " + report.policies[p] + "@" + file;
      }
    }
  }

  // Exact joint optimum on toy instances, against exact policy values.
  std::string toy_detail;
  bool toy_ok = true;
  for (const char* file : {"toy.json", "small_dynamic.json"}) {
    const RunConfig cfg = config(file);
    const Instance& in = cfg.instance;
    const double tol = 1e-10;
    const JointDpResult dp = brute_force_joint_dp(in, tol);
    const double bound = solve_bound(in).bound;
    const auto table = std::make_shared<const IndexTable>(compute_index_table(in));
    double best_heuristic = -1e300;
    for (const char* p : {"whittle", "whittle+lllp", "edf", "llf", "valley"}) {
      const double v = evaluate_joint_policy(in, Scheduler(in, parse_policy(p), table), tol);
      best_heuristic = std::max(best_heuristic, v);
      if (v > dp.value + 1e-7) toy_ok = false;
    }
    if (dp.value > bound + 1e-7) toy_ok = false;
    toy_detail += std::string(" ") + file + ": heuristics <= " + num(best_heuristic, 7) +
                  " <= joint " + num(dp.value, 7) + " <= bound " + num(bound, 7) + ";";
  }
  return {violations.empty() && toy_ok,
          std::to_string(checked) + " policy/instance pairs, worst mean - bound - hw " +
              num(worst_excess, 4) + (violations.empty() ? "" : "; above bound:" + violations) +
              ";" + toy_detail};
}

Outcome constant_cost_ordering() {
  RunConfig cfg = config("constant_cost.json");
  Instance in = cfg.instance;
  in.capacity = in.chargers / 2;
  const std::vector<std::string> names{"whittle", "whittle+lllp", "llf", "edf"};
  const auto report = simulate(in, names, seed_range(1, 200), cfg.horizon,
                               table_if_needed(in, names));
  const double bound = solve_bound(in).bound;
  const MeanInterval& wl = report.reward_of("whittle+lllp");
  const MeanInterval& llf = report.reward_of("llf");
  const bool indistinguishable =
      std::abs(wl.mean - llf.mean) <= std::min(wl.half_width, llf.half_width);
  const bool near_bound = wl.mean >= 0.95 * bound && llf.mean >= 0.95 * bound;
  bool edf_worst = true;
  double weakest = 1e300;
  for (const char* p : {"whittle", "whittle+lllp", "llf"}) {
    const MeanInterval d = report.paired_difference(p, "edf");
    weakest = std::min(weakest, lower(d));
    if (!(lower(d) > 0.0)) edf_worst = false;
  }
  return {indistinguishable && near_bound && edf_worst,
          "whittle+lllp " + num(wl.mean, 7) + " +/- " + num(wl.half_width, 3) + ", llf " +
              num(llf.mean, 7) + " +/- " + num(llf.half_width, 3) + ", bound " + num(bound, 7) +
              " (ratios " + num(wl.mean / bound, 4) + ", " + num(llf.mean / bound, 4) +
              "); smallest paired lower limit over edf " + num(weakest, 4)};
}

Outcome dynamic_cost_gains() {
  const RunConfig cfg = config("dynamic_half_capacity.json");
  if (cfg.instance.cost_states() != 5 || 2 * cfg.instance.capacity != cfg.instance.chargers ||
      cfg.instance.chargers != 10) {
    return {false, "half-capacity config must use a 5-state chain, N = 10, M = 5"};
  }
  const auto& report = configured_run("dynamic_half_capacity.json", cfg.instance.capacity);
  const MeanInterval& wl = report.reward_of("whittle+lllp");
  const MeanInterval& edf = report.reward_of("edf");
  const MeanInterval d = report.paired_difference("whittle+lllp", "whittle");
  const double ratio = wl.mean / edf.mean;
  return {ratio >= 1.4 && lower(d) > 0.0,
          "whittle+lllp / edf = " + num(ratio, 4) + " (need >= 1.4); whittle+lllp - whittle = " +
              num(d.mean, 4) + " +/- " + num(d.half_width, 4) + " over " + std::to_string(d.n) +
              " seeds; llf " + num(report.reward_of("llf").mean, 6) + ", whittle " +
              num(report.reward_of("whittle").mean, 6)};
}

Outcome dual_lp_agreement() {
  std::vector<Instance> instances;
  for (unsigned seed = 201; seed <= 207; ++seed) instances.push_back(testing::random_instance(seed));
  instances.push_back(testing::two_state_instance(2));
  instances.push_back(testing::constant_cost_instance(0.5, 0.95, 6, 5, 0.9, 10, 3));
  instances.push_back(testing::two_state_instance(1, 0.95, 5, 4));
  double worst = 0.0;
  int binding = 0;
  for (const auto& in : instances) {
    const BoundResult dual = solve_bound(in);
    const BoundResult lp = solve_bound_lp(in);
    worst = std::max(worst, std::abs(dual.per_charger - lp.per_charger));
    binding += dual.lambda > 0.0 ? 1 : 0;
  }
  return {worst < 1e-4, std::to_string(instances.size()) + " instances (" +
                            std::to_string(binding) + " with a binding budget), max |dual - LP| " +
                            num(worst, 3) + " per charger"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome reproducibility() {
  const RunConfig cfg = config("toy.json");
  const auto table = table_if_needed(cfg.instance, cfg.policies);
  const auto seeds = seed_range(cfg.first_seed, cfg.seed_count);
  auto csv = [&](int threads) {
    const auto report = simulate(cfg.instance, cfg.policies, seeds, cfg.horizon, table, threads);
    std::ostringstream os;
    os.precision(17);
    write_episodes_csv(report, os);
    write_plot_csv(report, cfg.instance, os);
    return os.str();
  };
  const bool in_process = csv(1) == csv(1) && csv(1) == csv(3);

  // Two separate runs of the command-line tool.
  const fs::path base = fs::temp_directory_path() / ("evsched_acceptance_" + std::to_string(getpid()));
  const std::string cli = EVSCHED_CLI;
  const std::string conf = (fs::path(EVSCHED_CONFIG_DIR) / "dynamic_half_capacity.json").string();
  bool cli_same = true;
  std::string files;
  int rc = 0;
  for (int run = 0; run < 2; ++run) {
    const std::string cmd = "\"" + cli + "\" simulate --config \"" + conf + "\" --seeds 5 --out \"" +
                            (base / std::to_string(run)).string() + "\" 2>/dev/null";
    rc |= std::system(cmd.c_str());
  }
  for (const char* f : {"episodes.csv", "plot.csv", "report.json"}) {
    const std::string a = slurp(base / "0" / f);
    const std::string b = slurp(base / "1" / f);
    if (a.empty() || a != b) cli_same = false;
    files += std::string(" ") + f;
  }
  fs::remove_all(base);
  return {in_process && cli_same && rc == 0,
          std::string("in-process CSV ") + (in_process ? "identical" : "DIFFERENT") +
              " across runs and thread counts; CLI" + files + " " +
              (cli_same && rc == 0 ? "identical" : "DIFFERENT") + " across two runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form equivalence", closed_form_equivalence},
      {"oracle equivalence", oracle_equivalence},
      {"indexability and propositions", indexability_and_propositions},
      {"M=N optimality", equal_capacity_optimality},
      {"bound dominance", bound_dominance},
      {"constant-cost ordering", constant_cost_ordering},
      {"dynamic-cost gains", dynamic_cost_gains},
      {"dual/LP agreement", dual_lp_agreement},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << " [" << num(seconds, 3) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
