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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpdecay_cli/experiment.hpp"

namespace {

using dpdecay::cli::Json;

Json assemble_config(const std::string& path,
                     const std::vector<std::string>& overrides,
                     const CLI::Option* seed_opt, std::int64_t seed) {
  Json config = dpdecay::cli::load_config_file(path);
  for (const std::string& assignment : overrides) {
    dpdecay::cli::apply_override(config, assignment);
  }
  if (seed_opt != nullptr && seed_opt->count() > 0) {
    config["train.seed"] = seed;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private training with decaying noise and "
               "clipping schedules"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> config_paths;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = 0;

  CLI::App* acct = app.add_subcommand(
      "accountant", "price a training plan or solve for its noise variance");
  acct->add_option("--config", config_path, "flat JSON config")->required();
  acct->add_option("--set", overrides, "override, key=value (repeatable)");
  CLI::Option* acct_out =
      acct->add_option("--out", out_dir, "directory for accountant.json");

  CLI::App* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config_path, "flat JSON config or a "
                                             "run_manifest.json")
      ->required();
  train->add_option("--set", overrides, "override, key=value (repeatable)");
  CLI::Option* train_seed =
      train->add_option("--seed", seed, "override train.seed");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* compare = app.add_subcommand(
      "compare", "run several configs against one dataset");
  compare->add_option("--config", config_paths, "flat JSON config (repeat "
                                                "for each run)")
      ->required();
  compare->add_option("--set", overrides,
                      "override applied to every config (repeatable)");
  CLI::Option* compare_seed =
      compare->add_option("--seed", seed, "override train.seed everywhere");
  compare->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (acct->parsed()) {
      const Json config = assemble_config(config_path, overrides, nullptr, 0);
      const Json report = dpdecay::cli::run_accountant(config);
      std::cout << report.dump(2) << "\n";
      if (acct_out->count() > 0) {
        const Json wrapped = report;  // single-document output directory
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        std::ofstream out(fs::path(out_dir) / "accountant.json",
                          std::ios::binary);
        if (!out) {
          throw std::runtime_error("cannot write accountant.json in '" +
                                   out_dir + "'");
        }
        out << wrapped.dump(2) << "\n";
      }
    } else if (train->parsed()) {
      const Json config =
          assemble_config(config_path, overrides, train_seed, seed);
      const Json metrics = dpdecay::cli::run_train(config, out_dir);
      std::cout << metrics.dump(2) << "\n";
    } else if (compare->parsed()) {
      std::vector<Json> configs;
      configs.reserve(config_paths.size());
      for (const std::string& path : config_paths) {
        configs.push_back(
            assemble_config(path, overrides, compare_seed, seed));
      }
      const Json result = dpdecay::cli::run_compare(configs, out_dir);
      std::cout << result["table"].get<std::string>();
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
