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

#include "evsched/costfit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstring>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace evsched {
namespace {

int digits(const std::string& s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw std::invalid_argument("timestamp: truncated '" + s + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("timestamp: bad digit in '" + s + "'");
    v = 10 * v + (s[i] - '0');
  }
  return v;
}

void expect(const std::string& s, std::size_t pos, const char* allowed) {
  if (pos >= s.size() || !std::strchr(allowed, s[pos])) {
    throw std::invalid_argument("timestamp: unexpected character in '" + s + "'");
  }
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  const auto last = s.find_last_not_of(" \t\r\n\"");
  if (first == std::string::npos) return {};
  return s.substr(first, last - first + 1);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  using namespace std::chrono;
  const std::string s = trim(text);
  const int y = digits(s, 0, 4);
  expect(s, 4, "-");
  const int mo = digits(s, 5, 2);
  expect(s, 7, "-");
  const int d = digits(s, 8, 2);
  expect(s, 10, "T ");
  const int hh = digits(s, 11, 2);
  expect(s, 13, ":");
  const int mm = digits(s, 14, 2);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    ss = digits(s, pos + 1, 2);
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
  }
  int offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      const int sign = s[pos] == '-' ? -1 : 1;
      const int oh = digits(s, pos + 1, 2);
      std::size_t next = pos + 3;
      if (next < s.size() && s[next] == ':') ++next;
      const int om = digits(s, next, 2);
      offset = sign * (oh * 3600 + om * 60);
      pos = next + 2;
    }
  }
  if (pos != s.size()) throw std::invalid_argument("timestamp: trailing text in '" + s + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw std::invalid_argument("timestamp: out-of-range field in '" + s + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

PriceTrace read_price_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line).rfind("timestamp,price", 0) != 0) {
    throw std::runtime_error("price CSV: header must be 'timestamp,price'");
  }
  PriceTrace trace;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("price CSV: missing comma on line " + std::to_string(row));
    }
    PriceRecord r;
    try {
      r.time = parse_timestamp(line.substr(0, comma));
      std::size_t used = 0;
      const std::string p = trim(line.substr(comma + 1));
      r.price = std::stod(p, &used);
      if (used != p.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception& e) {
      throw std::runtime_error("price CSV: line " + std::to_string(row) + ": " + e.what());
    }
    if (!std::isfinite(r.price)) {
      throw std::runtime_error("price CSV: non-finite price on line " + std::to_string(row));
    }
    if (!trace.empty() && r.time <= trace.back().time) {
      throw std::runtime_error("price CSV: timestamps must increase (line " +
                               std::to_string(row) + ")");
    }
    trace.push_back(r);
  }
  return trace;
}

std::vector<double> resample(const PriceTrace& trace, std::int64_t slot_seconds,
                             std::int64_t* first_slot) {
  if (slot_seconds <= 0) throw std::invalid_argument("resample: slot length must be positive");
  if (trace.empty()) throw std::invalid_argument("resample: empty trace");
  auto slot_of = [slot_seconds](std::int64_t t) {
    return t >= 0 ? t / slot_seconds : -((-t + slot_seconds - 1) / slot_seconds);
  };
  const std::int64_t s0 = slot_of(trace.front().time);
  const std::int64_t count = slot_of(trace.back().time) - s0 + 1;
  std::vector<double> sum(static_cast<std::size_t>(count), 0.0);
  std::vector<int> n(static_cast<std::size_t>(count), 0);
  for (const auto& r : trace) {
    const auto i = static_cast<std::size_t>(slot_of(r.time) - s0);
    sum[i] += r.price;
    ++n[i];
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = n[i] > 0 ? sum[i] / n[i] : out[i - 1];
  }
  if (first_slot) *first_slot = s0;
  return out;
}

Quantization quantize(const std::vector<double>& prices, int k, double retail_price) {
  if (k < 1) throw std::invalid_argument("quantize: K must be >= 1");
  std::vector<double> sorted = prices;
  std::sort(sorted.begin(), sorted.end());
  // Distinct values with their multiplicities.
  std::vector<double> value;
  std::vector<int> count;
  for (double p : sorted) {
    if (value.empty() || p != value.back()) {
      value.push_back(p);
      count.push_back(0);
    }
    ++count.back();
  }
  const int groups = static_cast<int>(value.size());
  if (groups < k) {
    throw std::invalid_argument("quantize: need at least K distinct prices");
  }
  // Bin b ends at the first group where the running count reaches
  // (b+1) n / K, keeping at least one group for every later bin.
  const double n = static_cast<double>(sorted.size());
  std::vector<double> upper;  // largest price of each bin
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  int g = 0;
  double running = 0.0;
  for (int b = 0; b < k; ++b) {
    const double target = (b + 1) * n / k;
    const int last_allowed = groups - (k - b);  // inclusive
    do {
      running += count[static_cast<std::size_t>(g)];
      sums(b) += value[static_cast<std::size_t>(g)] * count[static_cast<std::size_t>(g)];
      counts(b) += count[static_cast<std::size_t>(g)];
      ++g;
    } while (g <= last_allowed && (b == k - 1 || running < target - 1e-9));
    if (b == k - 1) {
      while (g < groups) {
        sums(b) += value[static_cast<std::size_t>(g)] * count[static_cast<std::size_t>(g)];
        counts(b) += count[static_cast<std::size_t>(g)];
        ++g;
      }
    }
    upper.push_back(value[static_cast<std::size_t>(g - 1)]);
  }
  Quantization q;
  const double mean = std::accumulate(prices.begin(), prices.end(), 0.0) / n;
  q.retail_price = retail_price > 0.0 ? retail_price : 2.0 * mean;
  if (!(q.retail_price > 0.0)) {
    throw std::invalid_argument("quantize: retail price must be positive (mean price <= 0)");
  }
  q.levels = sums.cwiseQuotient(counts) / q.retail_price;
  q.states.reserve(prices.size());
  for (double p : prices) {
    const auto it = std::lower_bound(upper.begin(), upper.end(), p);
    q.states.push_back(static_cast<int>(it - upper.begin()));
  }
  return q;
}

CostChain estimate_chain(const std::vector<int>& states, const Eigen::VectorXd& levels,
                         double alpha, int periods, int first_period) {
  const int k = static_cast<int>(levels.size());
  if (states.size() < 2) throw std::invalid_argument("estimate_chain: need at least 2 states");
  if (k < 1 || periods < 1 || alpha < 0.0) {
    throw std::invalid_argument("estimate_chain: need K >= 1, periods >= 1, alpha >= 0");
  }
  for (int s : states) {
    if (s < 0 || s >= k) throw std::invalid_argument("estimate_chain: state outside 0..K-1");
  }
  std::vector<Eigen::MatrixXd> counts(static_cast<std::size_t>(periods),
                                      Eigen::MatrixXd::Zero(k, k));
  for (std::size_t t = 0; t + 1 < states.size(); ++t) {
    const auto tau = static_cast<std::size_t>(
        ((first_period + static_cast<long long>(t)) % periods + periods) % periods);
    counts[tau](states[t], states[t + 1]) += 1.0;
  }
  std::vector<Eigen::MatrixXd> mats;
  for (auto& c : counts) {
    Eigen::MatrixXd p = c.array() + alpha;
    for (int r = 0; r < k; ++r) {
      const double total = p.row(r).sum();
      if (total > 0.0) {
        p.row(r) /= total;
      } else {
        p.row(r).setConstant(1.0 / k);
      }
    }
    mats.push_back(std::move(p));
  }
  return CostChain(levels, std::move(mats));
}

void write_cost_chain_json(const CostChain& chain, std::ostream& os) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json doc;
  doc["levels"] = std::vector<double>(chain.levels().data(),
                                      chain.levels().data() + chain.levels().size());
  if (chain.per_period()) {
    nlohmann::json all = nlohmann::json::array();
    for (int p = 0; p < chain.matrix_count(); ++p) all.push_back(matrix(chain.transition(p)));
    doc["per_period"] = std::move(all);
  } else {
    doc["transition"] = matrix(chain.transition(0));
  }
  os << doc.dump(1) << '\n';
}

CostChain read_cost_chain_json(std::istream& is) {
  const nlohmann::json doc = nlohmann::json::parse(is);
  auto matrix = [](const nlohmann::json& j, int k) {
    if (!j.is_array() || static_cast<int>(j.size()) != k) {
      throw std::invalid_argument("cost chain JSON: matrix must be K x K");
    }
    Eigen::MatrixXd m(k, k);
    for (int r = 0; r < k; ++r) {
      if (!j[r].is_array() || static_cast<int>(j[r].size()) != k) {
        throw std::invalid_argument("cost chain JSON: matrix must be K x K");
      }
      for (int c = 0; c < k; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
  };
  for (const auto& [key, _] : doc.items()) {
    if (key != "levels" && key != "transition" && key != "per_period") {
      throw std::invalid_argument("cost chain JSON: unknown key '" + key + "'");
    }
  }
  const auto lv = doc.at("levels").get<std::vector<double>>();
  const int k = static_cast<int>(lv.size());
  Eigen::VectorXd levels = Eigen::Map<const Eigen::VectorXd>(lv.data(), k);
  if (doc.contains("per_period") == doc.contains("transition")) {
    throw std::invalid_argument("cost chain JSON: give exactly one of transition / per_period");
  }
  if (doc.contains("transition")) return CostChain(levels, matrix(doc["transition"], k));
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& m : doc["per_period"]) mats.push_back(matrix(m, k));
  return CostChain(levels, std::move(mats));
}

FittedChain fit_cost_chain(const PriceTrace& trace, const FitOptions& options) {
  if (options.periods < 1) throw std::invalid_argument("fit_cost_chain: periods must be >= 1");
  FittedChain out;
  const std::vector<double> prices = resample(trace, options.slot_seconds, &out.first_slot);
  out.quantization = quantize(prices, options.states, options.retail_price);
  const std::int64_t p = options.periods;
  out.first_period = static_cast<int>(((out.first_slot % p) + p) % p);
  out.chain = estimate_chain(out.quantization.states, out.quantization.levels, options.alpha,
                             options.periods, out.first_period);
  return out;
}

}  // namespace evsched
