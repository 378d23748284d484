// Copyright 2026 The qfilter Authors
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

// qfilter: runs one experiment from a JSON configuration and writes its
// CSV/JSON artifacts. Exit status 0 on pass, 2 on acceptance failure, 1 on
// error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qfilter/config.hpp"
#include "qfilter/errors.hpp"
#include "qfilter/experiments.hpp"
#include "qfilter/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum filtering simulation experiments"};
  std::string config_path;
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  bool list = false;
  bool serial = false;
  app.add_option("--config", config_path, "JSON experiment configuration");
  app.add_option("--experiment", experiment, "experiment name; runs its default settings without --config");
  app.add_option("--seed", seed, "base seed override");
  app.add_option("--threads", threads, "OpenMP thread count (default: available cores)")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory override");
  app.add_flag("--serial", serial, "use the serial reference path instead of OpenMP");
  app.add_flag("--list", list, "list experiment names and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (list) {
    for (auto k : qfilter::all_experiments()) {
      const int c = qfilter::criterion_of(k);
      std::cout << qfilter::to_string(k);
      if (c > 0) std::cout << "  (acceptance criterion " << c << ")";
      std::cout << "\n";
    }
    return 0;
  }
  try {
    qfilter::ExperimentConfig config;
    if (!config_path.empty()) {
      config = qfilter::load_config(config_path);
      if (!experiment.empty() && qfilter::parse_experiment(experiment) != config.kind) {
        throw qfilter::ConfigError("--experiment " + experiment + " differs from the configuration's experiment " +
                                   qfilter::to_string(config.kind));
      }
    } else if (!experiment.empty()) {
      config = qfilter::default_config(qfilter::parse_experiment(experiment));
    } else {
      throw qfilter::ConfigError("one of --config or --experiment is required");
    }
    if (seed) config.numeric.seed = *seed;
    if (out) config.output.dir = *out;
    config.validate();
    if (threads) qfilter::set_thread_count(*threads);
    const auto exec = serial ? qfilter::Execution::kSerial : qfilter::Execution::kOpenMP;
    const qfilter::ExperimentResult result = qfilter::run_experiment(config, exec);
    qfilter::write_artifacts(result, config);
    std::cout << result.line() << std::endl;
    return result.passed ? 0 : 2;
  } catch (const qfilter::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
