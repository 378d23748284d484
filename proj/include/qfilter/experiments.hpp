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

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qfilter/config.hpp"
#include "qfilter/io.hpp"
#include "qfilter/parallel.hpp"

namespace qfilter {

struct ExperimentResult {
  std::string experiment;
  std::string metric_name;
  double metric = 0.0;
  std::string bound;  // the acceptance condition, human readable
  bool passed = false;
  Json summary;       // every number behind the verdict
  std::vector<std::pair<std::string, std::string>> csv;  // file name, content

  /// One line: experiment, key metric, bound and PASS/FAIL.
  std::string line() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config, Execution exec = Execution::kOpenMP);

/// Writes the CSV tables and summary.json under config.output.dir/<name>/
/// according to the selected formats. Returns the written paths.
std::vector<std::string> write_artifacts(const ExperimentResult& result, const ExperimentConfig& config);

}  // namespace qfilter
