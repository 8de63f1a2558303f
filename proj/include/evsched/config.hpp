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

// Run configuration: one JSON document describing an instance and what to
// do with it. Unknown keys anywhere in the document are rejected. The
// schema is documented in README.md.

#pragma once

#include "evsched/costfit.hpp"
#include "evsched/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched {

/// Any schema or semantic problem with a configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitSource {
  std::filesystem::path trace;  // resolved against the config directory
  FitOptions options;
};

struct RunConfig {
  std::string name = "run";
  Instance instance;
  std::optional<FitSource> fitted_from;  // set when the cost block used "fit"
  std::vector<std::string> policies{"whittle", "whittle+lllp", "edf", "llf"};
  std::vector<int> capacity_sweep;       // empty: instance.capacity only
  std::uint64_t first_seed = 1;
  int seed_count = 30;
  int horizon = 0;                       // 0: default_horizon
  int threads = 1;
  std::optional<std::string> baseline;
  std::filesystem::path output_dir = "out";
  bool verify_oracle = false;
  double oracle_tolerance = 1e-6;
  std::optional<FitSource> fitcost;      // inputs of the fitcost command
};

/// `base_dir` resolves relative file names inside the document. Throws
/// ConfigError.
RunConfig parse_run_config(std::istream& is, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);

/// Instance block alone, same schema as RunConfig's "instance" key.
Instance parse_instance(std::istream& is, const std::filesystem::path& base_dir);

}  // namespace evsched
