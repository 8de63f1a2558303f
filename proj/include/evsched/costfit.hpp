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

// Fitting the cost chain from a real-time price trace: resample to slots,
// quantize into K equal-count bins, count transitions.

#pragma once

#include "evsched/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace evsched {

struct PriceRecord {
  std::int64_t time = 0;  // seconds since the Unix epoch, UTC
  double price = 0.0;
};

using PriceTrace = std::vector<PriceRecord>;

/// ISO-8601 date-time: YYYY-MM-DD[T| ]hh:mm[:ss[.fff]][Z|+hh:mm|-hh:mm].
/// Fractional seconds are truncated; no zone means UTC.
std::int64_t parse_timestamp(const std::string& text);

/// CSV with header `timestamp,price`. Throws std::runtime_error on malformed
/// rows, non-finite prices or timestamps that do not strictly increase.
PriceTrace read_price_csv(std::istream& is);

/// Mean price per slot. Slots are aligned to multiples of `slot_seconds`
/// since the epoch; a slot without samples repeats the previous slot. The
/// epoch-aligned number of the first slot is written to `first_slot`.
std::vector<double> resample(const PriceTrace& trace, std::int64_t slot_seconds,
                             std::int64_t* first_slot = nullptr);

struct Quantization {
  Eigen::VectorXd levels;   // bin means divided by the retail price
  std::vector<int> states;  // 0-based bin per slot
  double retail_price = 1.0;
};

/// K equal-count bins over the sorted prices. Equal prices always share a
/// bin, so every bin holds at least one distinct value. `retail_price` <= 0
/// selects twice the mean price, which puts the mean level at 0.5.
/// Throws std::invalid_argument if K < 1 or fewer than K distinct prices.
Quantization quantize(const std::vector<double>& prices, int k, double retail_price = 0.0);

/// P_jk = (n_jk + alpha) / (n_j + alpha K) with K = levels.size(). With
/// `periods` > 1 the counts are kept per period of the source slot, slot t
/// being in period (first_period + t) mod periods. A row with no counts and
/// alpha = 0 is uniform. Throws std::invalid_argument on fewer than 2 states
/// or a state outside 0..K-1.
CostChain estimate_chain(const std::vector<int>& states, const Eigen::VectorXd& levels,
                         double alpha = 0.5, int periods = 1, int first_period = 0);

struct FitOptions {
  int states = 5;                    // K
  std::int64_t slot_seconds = 3600;
  double alpha = 0.5;
  int periods = 1;                   // 1: one matrix; else per-period matrices
  double retail_price = 0.0;         // <= 0: twice the mean price
};

struct FittedChain {
  CostChain chain;
  Quantization quantization;
  std::int64_t first_slot = 0;  // epoch-aligned slot number of slot 0
  int first_period = 0;         // first_slot mod periods
};

/// resample, quantize and estimate_chain in one pass. Period p of the
/// fitted chain covers the slots whose epoch-aligned number is p mod periods.
FittedChain fit_cost_chain(const PriceTrace& trace, const FitOptions& options);

/// {"levels": [...], "transition": [[...]]} or, per period,
/// {"levels": [...], "per_period": [[[...]], ...]}.
void write_cost_chain_json(const CostChain& chain, std::ostream& os);
CostChain read_cost_chain_json(std::istream& is);

}  // namespace evsched
