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

// evsched command-line driver. Exit codes: 0 success, 1 runtime failure,
// 2 configuration or usage error, 3 verification failure.

#include "evsched/bound.hpp"
#include "evsched/config.hpp"
#include "evsched/costfit.hpp"
#include "evsched/index.hpp"
#include "evsched/policies.hpp"
#include "evsched/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace evsched;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;
constexpr int kVerificationFailure = 3;

// Dense simplex cross-check is only attempted below this many LP states.
constexpr int kLpStateLimit = 2000;

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out;
  int seeds = 0;
  int threads = 0;
  bool verify = false;
  std::string baseline;
  // fitcost only
  std::string trace;
  int states = 0;
  long long slot_seconds = 0;
  double alpha = -1.0;
  int periods = 0;
  double retail = -1.0;
};

void log(const std::string& msg) { std::clog << "[evsched] " << msg << '\n'; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(3);
  os << v;
  return os.str();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

RunConfig load(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_run_config(opt.config);
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seeds > 0) cfg.seed_count = opt.seeds;
  if (opt.threads > 0) cfg.threads = opt.threads;
  if (opt.verify) cfg.verify_oracle = true;
  if (!opt.baseline.empty()) {
    if (std::find(cfg.policies.begin(), cfg.policies.end(), opt.baseline) == cfg.policies.end()) {
      throw ConfigError("--paired-baseline '" + opt.baseline + "' is not among the policies");
    }
    cfg.baseline = opt.baseline;
  }
  return cfg;
}

std::ofstream open_output(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  std::ofstream os(dir / file);
  if (!os) throw std::runtime_error("cannot write " + (dir / file).string());
  os.precision(17);
  return os;
}

// ---------------------------------------------------------------------------

int cmd_index(const Options& opt) {
  const RunConfig cfg = load(opt);
  const Instance& in = cfg.instance;
  const ExtendedStateSpace space(in);
  log("index grid: Tbar=" + std::to_string(in.max_lead) + " Bbar=" + std::to_string(in.max_demand) +
      " cost states=" + std::to_string(in.cost_states()) + " periods=" +
      std::to_string(in.periods()) + " (" + std::to_string(space.size()) + " states)");
  Stopwatch clock;
  const IndexTable table = compute_index_table(in);
  log("index table built in " + fixed(clock.seconds()) + " s");
  {
    auto os = open_output(cfg.output_dir, "index_table.csv");
    table.write_csv(os);
  }
  {
    auto os = open_output(cfg.output_dir, "index_table.json");
    table.write_json(os);
  }
  log("wrote " + (cfg.output_dir / "index_table.csv").string() + " and index_table.json");

  if (!cfg.verify_oracle) return 0;
  double worst = 0.0;
  std::string oracle;
  if (in.cost_states() == 1) {
    oracle = "closed form";
    for (int t = 1; t <= in.max_lead; ++t) {
      for (int b = 1; b <= in.max_demand; ++b) {
        const double ref = closed_form_index(t, b, in.cost.level(0), in.discount, in.penalty);
        for (int p = 0; p < in.periods(); ++p) worst = std::max(worst, std::abs(table(t, b, 0, p) - ref));
      }
    }
  } else {
    oracle = "bisection on value iteration";
    Stopwatch oc;
    const IndexTable ref = index_table_by_bisection(in, cfg.oracle_tolerance * 0.1);
    log("oracle table built in " + fixed(oc.seconds()) + " s");
    for (int t = 1; t <= in.max_lead; ++t) {
      for (int b = 1; b <= in.max_demand; ++b) {
        for (int k = 0; k < in.cost_states(); ++k) {
          for (int p = 0; p < in.periods(); ++p) {
            worst = std::max(worst, std::abs(table(t, b, k, p) - ref(t, b, k, p)));
          }
        }
      }
    }
  }
  log("oracle (" + oracle + ") max abs difference " + std::to_string(worst));
  if (!(worst <= cfg.oracle_tolerance)) {
    throw VerificationFailure("index table differs from the " + oracle + " oracle by " +
                              sci(worst));
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& opt) {
  const RunConfig cfg = load(opt);
  const auto seeds = seed_range(cfg.first_seed, cfg.seed_count);
  std::vector<int> capacities = cfg.capacity_sweep;
  const bool sweep = !capacities.empty();
  if (!sweep) capacities.push_back(cfg.instance.capacity);

  std::shared_ptr<const IndexTable> table;
  for (const auto& p : cfg.policies) {
    const PolicyKind k = parse_policy(p);
    if (k == PolicyKind::whittle || k == PolicyKind::whittle_lllp) {
      Stopwatch clock;
      table = std::make_shared<const IndexTable>(compute_index_table(cfg.instance));
      log("index table built in " + fixed(clock.seconds()) + " s");
      break;
    }
  }

  std::ostringstream plot;
  plot.precision(17);
  bool dominance_ok = true;
  std::string dominance_report;
  for (int m : capacities) {
    Instance in = cfg.instance;
    in.capacity = m;
    std::vector<Scheduler> policies;
    for (const auto& p : cfg.policies) policies.emplace_back(in, parse_policy(p), table);
    MonteCarloOptions mc;
    mc.horizon = cfg.horizon;
    mc.threads = cfg.threads;
    mc.baseline = cfg.baseline;
    const int horizon = cfg.horizon > 0 ? cfg.horizon : default_horizon(in);
    log("simulating M=" + std::to_string(m) + " N=" + std::to_string(in.chargers) + ", " +
        std::to_string(policies.size()) + " policies x " + std::to_string(seeds.size()) +
        " seeds, horizon " + std::to_string(horizon));
    Stopwatch clock;
    const ComparisonReport report = monte_carlo(in, policies, seeds, mc);
    const BoundResult bound = solve_bound(in);
    log("done in " + fixed(clock.seconds()) + " s; bound " + fixed(bound.bound, 4));
    for (std::size_t p = 0; p < report.policies.size(); ++p) {
      const auto& r = report.reward[p];
      log("  " + report.policies[p] + ": " + fixed(r.mean, 4) + " +/- " + fixed(r.half_width, 4));
      const double slack = std::isnan(r.half_width) ? 0.0 : r.half_width;
      if (r.mean > bound.bound + slack + 1e-9 * std::abs(bound.bound)) {
        dominance_ok = false;
        dominance_report += " " + report.policies[p] + "@M=" + std::to_string(m);
      }
    }
    for (const auto& d : report.paired) {
      log("  paired " + d.policy + " - " + d.baseline + ": " + fixed(d.difference.mean, 4) +
          " +/- " + fixed(d.difference.half_width, 4));
    }

    const std::string suffix = sweep ? "_m" + std::to_string(m) : "";
    {
      auto os = open_output(cfg.output_dir, "episodes" + suffix + ".csv");
      write_episodes_csv(report, os);
    }
    {
      auto os = open_output(cfg.output_dir, "report" + suffix + ".json");
      write_report_json(report, os);
    }
    std::ostringstream rows;
    write_plot_csv(report, in, rows, bound.bound);
    std::string text = rows.str();
    if (plot.tellp() > 0) text = text.substr(text.find('\n') + 1);
    plot << text;
  }
  {
    auto os = open_output(cfg.output_dir, "plot.csv");
    os << plot.str();
  }
  log("wrote episodes, report and plot files to " + cfg.output_dir.string());
  if (cfg.verify_oracle && !dominance_ok) {
    throw VerificationFailure("simulated reward above the upper bound for" + dominance_report);
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_bound(const Options& opt) {
  const RunConfig cfg = load(opt);
  const Instance& in = cfg.instance;
  Stopwatch clock;
  const BoundResult b = solve_bound(in);
  log("bound " + fixed(b.bound, 6) + " (lambda " + fixed(b.lambda, 6) + ", " +
      std::to_string(b.evaluations) + " evaluations, " + fixed(clock.seconds()) + " s)");

  nlohmann::json doc = {{"bound", b.bound},
                        {"per_charger", b.per_charger},
                        {"lambda", b.lambda},
                        {"activation_frequency", b.activation_frequency},
                        {"evaluations", b.evaluations},
                        {"method", b.method},
                        {"chargers", in.chargers},
                        {"capacity", in.capacity}};
  std::string failure;
  if (cfg.verify_oracle) {
    nlohmann::json checks = nlohmann::json::object();
    const int lp_states = ExtendedStateSpace(in).size();
    if (lp_states <= kLpStateLimit) {
      const BoundResult lp = solve_bound_lp(in);
      const double gap = std::abs(lp.bound - b.bound);
      checks["occupancy_lp"] = {{"bound", lp.bound}, {"abs_difference", gap}};
      log("occupancy LP bound " + fixed(lp.bound, 6) + ", difference " + sci(gap));
      if (!(gap <= 1e-4 * std::max(1.0, std::abs(b.bound)))) {
        failure += "dual and LP bounds differ by " + sci(gap) + "; ";
      }
    } else {
      log("occupancy LP skipped (" + std::to_string(lp_states) + " states)");
    }
    if (in.chargers <= 16 && joint_state_count(in) <= 1000000) {
      const JointDpResult dp = brute_force_joint_dp(in, 1e-9);
      checks["joint_dp"] = {{"value", dp.value}, {"states", dp.states}};
      log("joint DP value " + fixed(dp.value, 6) + " over " + std::to_string(dp.states) + " states");
      if (dp.value > b.bound + 1e-6 * std::max(1.0, std::abs(b.bound))) {
        failure += "joint optimum exceeds the bound; ";
      }
    } else {
      log("joint DP skipped (instance too large)");
    }
    doc["verification"] = checks;
  }
  {
    auto os = open_output(cfg.output_dir, "bound.json");
    os << doc.dump(1) << '\n';
  }
  log("wrote " + (cfg.output_dir / "bound.json").string());
  if (!failure.empty()) throw VerificationFailure(failure);
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_fitcost(const Options& opt) {
  FitSource src;
  fs::path out_dir = "out";
  if (!opt.config.empty()) {
    const RunConfig cfg = load(opt);
    if (!cfg.fitcost) throw ConfigError("config has no 'fitcost' block");
    src = *cfg.fitcost;
    out_dir = cfg.output_dir;
  }
  if (!opt.out.empty()) out_dir = opt.out;
  if (!opt.trace.empty()) src.trace = opt.trace;
  if (opt.states > 0) src.options.states = opt.states;
  if (opt.slot_seconds > 0) src.options.slot_seconds = opt.slot_seconds;
  if (opt.alpha >= 0.0) src.options.alpha = opt.alpha;
  if (opt.periods > 0) src.options.periods = opt.periods;
  if (opt.retail >= 0.0) src.options.retail_price = opt.retail;
  if (src.trace.empty()) throw ConfigError("fitcost needs --trace or a config 'fitcost' block");

  std::ifstream in(src.trace);
  if (!in) throw ConfigError("cannot open price trace " + src.trace.string());
  PriceTrace trace;
  try {
    trace = read_price_csv(in);
  } catch (const std::runtime_error& e) {
    throw ConfigError(src.trace.string() + ": " + e.what());
  }
  const FittedChain fit = fit_cost_chain(trace, src.options);
  log("fitted " + std::to_string(fit.chain.size()) + " cost states from " +
      std::to_string(fit.quantization.states.size()) + " slots; retail price " +
      fixed(fit.quantization.retail_price, 4) + ", first period " + std::to_string(fit.first_period));
  {
    auto os = open_output(out_dir, "cost_chain.json");
    write_cost_chain_json(fit.chain, os);
  }
  {
    auto os = open_output(out_dir, "cost_states.csv");
    os << "slot,state,level\n";
    for (std::size_t t = 0; t < fit.quantization.states.size(); ++t) {
      const int s = fit.quantization.states[t];
      os << fit.first_slot + static_cast<std::int64_t>(t) << ',' << s << ','
         << fit.quantization.levels(s) << '\n';
    }
  }
  log("wrote " + (out_dir / "cost_chain.json").string() + " and cost_states.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging scheduler: index tables, simulation, upper bounds, cost fitting"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&opt](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "Run configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "Output directory (overrides output.dir)");
  };

  auto* index = app.add_subcommand("index", "Build the index table");
  common(index, true);
  index->add_flag("--verify-oracle", opt.verify, "Compare against an independent oracle");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of policies");
  common(simulate, true);
  simulate->add_option("--seeds", opt.seeds, "Number of seeds (overrides seeds.count)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--paired-baseline", opt.baseline, "Policy to pair every other against");
  simulate->add_flag("--verify-oracle", opt.verify, "Fail if any policy beats the upper bound");

  auto* bound = app.add_subcommand("bound", "Lagrangian upper bound");
  common(bound, true);
  bound->add_flag("--verify-oracle", opt.verify, "Cross-check against the LP and joint DP");

  auto* fitcost = app.add_subcommand("fitcost", "Fit a cost chain to a price trace");
  common(fitcost, false);
  fitcost->add_option("--trace", opt.trace, "CSV with header timestamp,price");
  fitcost->add_option("--states", opt.states, "Number of cost states K")->check(CLI::PositiveNumber);
  fitcost->add_option("--slot", opt.slot_seconds, "Slot length in seconds")
      ->check(CLI::PositiveNumber);
  fitcost->add_option("--alpha", opt.alpha, "Laplace smoothing")->check(CLI::NonNegativeNumber);
  fitcost->add_option("--periods", opt.periods, "Per-period matrices (1: single matrix)")
      ->check(CLI::PositiveNumber);
  fitcost->add_option("--retail", opt.retail, "Retail price (0: twice the mean)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*index) return cmd_index(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*bound) return cmd_bound(opt);
    return cmd_fitcost(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerificationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
