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

#include "evsched/config.hpp"

#include "evsched/policies.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace evsched {

namespace {

using nlohmann::json;

// Typed access to one JSON object. Every key read is recorded so that
// finish() can reject the rest.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) fail("missing required key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  Object object(const std::string& key) { return Object(raw(key), child(key)); }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail("unknown key '" + item.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(path + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a square matrix");
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = numbers(v[static_cast<std::size_t>(i)], path);
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(path + ": expected a square matrix");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

Eigen::VectorXd vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int to_int(Object& o, const std::string& key, int fallback) {
  const long long v = o.integer(key, fallback);
  if (v < INT32_MIN || v > INT32_MAX) o.fail("'" + key + "' out of range");
  return static_cast<int>(v);
}

FitSource parse_fit(Object o, const std::filesystem::path& base_dir) {
  FitSource f;
  f.trace = base_dir / o.string("trace");
  f.options.states = to_int(o, "states", f.options.states);
  f.options.slot_seconds = o.integer("slot_seconds", f.options.slot_seconds);
  f.options.alpha = o.number("alpha", f.options.alpha);
  f.options.periods = to_int(o, "periods", f.options.periods);
  f.options.retail_price = o.number("retail_price", f.options.retail_price);
  o.finish();
  if (f.options.states < 1) o.fail("'states' must be >= 1");
  if (f.options.slot_seconds < 1) o.fail("'slot_seconds' must be >= 1");
  if (f.options.alpha < 0.0) o.fail("'alpha' must be >= 0");
  if (f.options.periods < 1) o.fail("'periods' must be >= 1");
  return f;
}

PenaltyFunction parse_penalty(Object o, int max_demand) {
  const bool quad = o.has("quadratic");
  const bool table = o.has("table");
  if (quad == table) o.fail("give exactly one of 'quadratic' or 'table'");
  PenaltyFunction out;
  try {
    if (quad) {
      out = PenaltyFunction::quadratic(o.number("quadratic"), max_demand);
    } else {
      out = PenaltyFunction(numbers(o.raw("table"), o.child("table")));
    }
  } catch (const std::invalid_argument& e) {
    o.fail(e.what());
  }
  o.finish();
  return out;
}

CostChain parse_cost(Object o, const std::filesystem::path& base_dir,
                     std::optional<FitSource>* fitted) {
  const int forms = static_cast<int>(o.has("constant")) + static_cast<int>(o.has("levels")) +
                    static_cast<int>(o.has("chain_file")) + static_cast<int>(o.has("fit"));
  if (forms != 1) o.fail("give exactly one of 'constant', 'levels', 'chain_file' or 'fit'");
  CostChain chain;
  try {
    if (o.has("constant")) {
      chain = CostChain::constant(o.number("constant"));
    } else if (o.has("levels")) {
      const Eigen::VectorXd levels = vector(numbers(o.raw("levels"), o.child("levels")));
      if (o.has("transition") == o.has("per_period")) {
        o.fail("'levels' needs exactly one of 'transition' or 'per_period'");
      }
      if (o.has("transition")) {
        chain = CostChain(levels, matrix(o.raw("transition"), o.child("transition")));
      } else {
        const json& all = o.raw("per_period");
        if (!all.is_array() || all.empty()) o.fail("'per_period' must be a non-empty array");
        std::vector<Eigen::MatrixXd> mats;
        for (const auto& m : all) mats.push_back(matrix(m, o.child("per_period")));
        chain = CostChain(levels, std::move(mats));
      }
    } else if (o.has("chain_file")) {
      const auto path = base_dir / o.string("chain_file");
      std::ifstream in(path);
      if (!in) o.fail("cannot open chain file " + path.string());
      chain = read_cost_chain_json(in);
    } else {
      FitSource f = parse_fit(o.object("fit"), base_dir);
      std::ifstream in(f.trace);
      if (!in) o.fail("cannot open price trace " + f.trace.string());
      chain = fit_cost_chain(read_price_csv(in), f.options).chain;
      *fitted = std::move(f);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    o.fail(e.what());
  }
  o.finish();
  return chain;
}

struct ArrivalSpec {
  std::vector<double> rates{0.7};
  std::optional<std::vector<TypeMass>> types;  // none: uniform over feasible (T,B)
};

ArrivalSpec parse_arrivals(Object o) {
  ArrivalSpec a;
  if (o.has("rate") == o.has("rates")) o.fail("give exactly one of 'rate' or 'rates'");
  if (o.has("rate")) {
    a.rates = {o.number("rate")};
  } else {
    a.rates = numbers(o.raw("rates"), o.child("rates"));
    if (a.rates.empty()) o.fail("'rates' must not be empty");
  }
  if (o.has("types")) {
    const json& list = o.raw("types");
    if (!list.is_array() || list.empty()) o.fail("'types' must be a non-empty array");
    std::vector<TypeMass> types;
    for (const auto& t : list) {
      Object e(t, o.child("types[]"));
      TypeMass m;
      m.state.lead = static_cast<int>(e.integer("lead"));
      m.state.demand = static_cast<int>(e.integer("demand"));
      m.probability = e.number("probability");
      e.finish();
      types.push_back(m);
    }
    a.types = std::move(types);
  }
  o.finish();
  return a;
}

Instance parse_instance_object(Object o, const std::filesystem::path& base_dir,
                               std::optional<FitSource>* fitted) {
  Instance in;
  in.chargers = to_int(o, "chargers", in.chargers);
  in.capacity = to_int(o, "capacity", in.capacity);
  in.discount = o.number("discount", in.discount);
  in.max_lead = to_int(o, "max_lead", in.max_lead);
  in.max_demand = to_int(o, "max_demand", in.max_demand);
  if (in.max_lead < 1 || in.max_demand < 1) o.fail("'max_lead' and 'max_demand' must be >= 1");
  if (!o.has("penalty")) o.fail("missing required key 'penalty' (a table or {\"quadratic\": k})");
  in.penalty = parse_penalty(o.object("penalty"), in.max_demand);
  in.cost = o.has("cost") ? parse_cost(o.object("cost"), base_dir, fitted) : CostChain::constant(0.5);
  const ArrivalSpec arr = o.has("arrivals") ? parse_arrivals(o.object("arrivals")) : ArrivalSpec{};
  o.finish();

  // The period count is shared by arrivals and per-period cost matrices; a
  // side given with one period is repeated.
  const int cost_periods = in.cost.per_period() ? in.cost.matrix_count() : 1;
  const int arrival_periods = static_cast<int>(arr.rates.size());
  if (cost_periods > 1 && arrival_periods > 1 && cost_periods != arrival_periods) {
    o.fail("arrival rates and per-period cost matrices disagree on the period count");
  }
  const int periods = std::max(cost_periods, arrival_periods);
  std::vector<double> rates = arr.rates;
  if (static_cast<int>(rates.size()) == 1) rates.assign(static_cast<std::size_t>(periods), rates[0]);
  try {
    if (arr.types) {
      in.arrivals = ArrivalModel(rates, std::vector<std::vector<TypeMass>>(
                                            static_cast<std::size_t>(periods), *arr.types));
    } else {
      ArrivalModel uniform =
          ArrivalModel::uniform_feasible(rates[0], in.max_lead, in.max_demand, periods);
      std::vector<std::vector<TypeMass>> types;
      for (int p = 0; p < periods; ++p) types.push_back(uniform.types(p));
      in.arrivals = ArrivalModel(rates, std::move(types));
    }
    in.validate();
  } catch (const std::invalid_argument& e) {
    o.fail(e.what());
  }
  return in;
}

json parse_document(std::istream& is) {
  try {
    return json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
}

}  // namespace

Instance parse_instance(std::istream& is, const std::filesystem::path& base_dir) {
  const json doc = parse_document(is);
  std::optional<FitSource> fitted;
  return parse_instance_object(Object(doc, "instance"), base_dir, &fitted);
}

RunConfig parse_run_config(std::istream& is, const std::filesystem::path& base_dir) {
  const json doc = parse_document(is);
  Object o(doc, "");
  RunConfig cfg;
  if (o.has("name")) cfg.name = o.string("name");
  if (!o.has("instance")) o.fail("missing required key 'instance'");
  cfg.instance = parse_instance_object(o.object("instance"), base_dir, &cfg.fitted_from);

  if (o.has("policies")) {
    const json& list = o.raw("policies");
    if (!list.is_array() || list.empty()) o.fail("'policies' must be a non-empty array");
    cfg.policies.clear();
    for (const auto& p : list) {
      if (!p.is_string()) o.fail("'policies' entries must be strings");
      const auto name = p.get<std::string>();
      try {
        parse_policy(name);
      } catch (const std::invalid_argument& e) {
        o.fail(e.what());
      }
      if (std::find(cfg.policies.begin(), cfg.policies.end(), name) != cfg.policies.end()) {
        o.fail("policy '" + name + "' listed twice");
      }
      cfg.policies.push_back(name);
    }
  }
  if (o.has("capacity_sweep")) {
    for (double m : numbers(o.raw("capacity_sweep"), "capacity_sweep")) {
      const int mi = static_cast<int>(m);
      if (mi != m || mi < 0 || mi > cfg.instance.chargers) {
        o.fail("'capacity_sweep' entries must be integers in [0, chargers]");
      }
      cfg.capacity_sweep.push_back(mi);
    }
  }
  if (o.has("seeds")) {
    if (o.raw("seeds").is_object()) {
      Object s = o.object("seeds");
      const long long first = s.integer("first", 1);
      if (first < 0) s.fail("'first' must be >= 0");
      cfg.first_seed = static_cast<std::uint64_t>(first);
      cfg.seed_count = to_int(s, "count", cfg.seed_count);
      s.finish();
    } else {
      cfg.seed_count = to_int(o, "seeds", cfg.seed_count);
    }
    if (cfg.seed_count < 1) o.fail("seed count must be >= 1");
  }
  cfg.horizon = to_int(o, "horizon", cfg.horizon);
  if (cfg.horizon < 0) o.fail("'horizon' must be >= 0");
  cfg.threads = to_int(o, "threads", cfg.threads);
  if (cfg.threads < 1) o.fail("'threads' must be >= 1");
  if (o.has("baseline")) cfg.baseline = o.string("baseline");
  if (o.has("output")) {
    Object out = o.object("output");
    cfg.output_dir = out.string("dir");
    out.finish();
  }
  if (o.has("oracle")) {
    Object orc = o.object("oracle");
    cfg.verify_oracle = orc.boolean("verify", cfg.verify_oracle);
    cfg.oracle_tolerance = orc.number("tolerance", cfg.oracle_tolerance);
    orc.finish();
    if (!(cfg.oracle_tolerance > 0.0)) o.fail("oracle tolerance must be > 0");
  }
  if (o.has("fitcost")) cfg.fitcost = parse_fit(o.object("fitcost"), base_dir);
  o.finish();
  if (cfg.baseline &&
      std::find(cfg.policies.begin(), cfg.policies.end(), *cfg.baseline) == cfg.policies.end()) {
    o.fail("baseline '" + *cfg.baseline + "' is not among the policies");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  return parse_run_config(in, file.parent_path());
}

}  // namespace evsched
