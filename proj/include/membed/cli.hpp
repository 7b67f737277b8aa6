// Copyright 2026 The membed Authors
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

#pragma once

// Command-line pipeline: generate, train, validate, predict, bayes, tomo and
// compare, all driven by one JSON run configuration.

#include <string>
#include <vector>

#include "membed/bayes.hpp"
#include "membed/serialize.hpp"
#include "membed/train.hpp"

namespace membed {

struct ErrorModelEntry {
  std::string path;
  long n = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  CollisionModelConfig collision = CollisionModelConfig::defaults();

  long generate_n = 1000;
  std::string train_path;  // default <out>/train.jsonl
  std::string val_path;    // default <out>/val.jsonl

  TrainConfig train;
  std::vector<int> d_er_candidates;  // default {train.d_er}
  std::string resume;                // model to continue training from

  std::vector<std::string> validate_models;
  std::string model_path;  // default <out>/model.json

  std::vector<double> predict_times;
  CMatrix rho_s0;

  BayesConfig bayes;
  int bayes_samples = 200;
  std::vector<double> bayes_times;
  std::vector<double> bayes_error_times;

  long tomo_total_shots = 20000;
  std::vector<int> tomo_k{5, 10, 20};

  double event_time = 20.0;
  CMatrix gate;
  int compare_t_max = 50;
  std::vector<int> compare_k{5, 20};
  std::vector<ErrorModelEntry> error_models;
};

// Unknown keys at any level raise ConfigError.
RunConfig parse_run_config(const Json& j);
Json resolved_config(const RunConfig& cfg);

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int run_cli(int argc, char** argv);

}  // namespace membed
