// Copyright 2026 The dpdecay Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPDECAY_CLI_EXPERIMENT_HPP_
#define DPDECAY_CLI_EXPERIMENT_HPP_

#include <string>
#include <vector>

#include "json.hpp"

// Configuration-driven experiment runner behind the command-line tool.
// Configs are JSON objects with flat dotted keys ("train.epochs": 10);
// nesting is rejected so manifests stay trivially diffable. All entry
// points throw std::invalid_argument for configuration problems and
// std::runtime_error for failures during execution; the binary maps those
// to exit codes 1 and 2.
namespace dpdecay::cli {

using Json = nlohmann::json;

// Reads a config file. A plain flat object is returned as-is; a run
// manifest (object with a nested "config" block) is unwrapped so a
// manifest can be fed straight back into the tool.
Json load_config_file(const std::string& path);

// Applies one "key=value" override. The value is parsed as JSON when it
// parses (numbers, booleans, arrays); anything else is taken as a string.
void apply_override(Json& config, const std::string& assignment);

// Privacy budget report; forward (sigma0^2 -> epsilon) or inverse
// (epsilon -> sigma0^2) depending on which key the config sets.
Json run_accountant(const Json& config);

// Full training run: repeated seeded trainings plus the privacy ledger.
// Writes metrics.json, trajectory.csv and run_manifest.json into out_dir
// and returns the metrics document.
Json run_train(const Json& config, const std::string& out_dir);

// Runs every config and emits one comparison row per config. All configs
// must agree on their data.* keys. Writes compare.csv and compare.txt
// into out_dir; returns {"rows": [...], "table": "..."}.
Json run_compare(const std::vector<Json>& configs, const std::string& out_dir);

}  // namespace dpdecay::cli

#endif  // DPDECAY_CLI_EXPERIMENT_HPP_
