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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfilter/chain.hpp"
#include "qfilter/io.hpp"
#include "qfilter/observable.hpp"

namespace qfilter {

enum class ExperimentKind {
  kConverge,         // criterion 1
  kGenerator,        // criterion 2
  kPhiIndependence,  // criterion 3
  kSdeEnsemble,      // criterion 4
  kPurity,           // criterion 5
  kEquivalence,      // criterion 6
  kCtrwLimit,        // criterion 7
  kFractional,       // criterion 8
  kCaputo,           // criterion 9
  kPositivity,       // criterion 10
  kControl,          // criterion 11
  kZeno,
  kHjb,
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& name);
std::vector<ExperimentKind> all_experiments();
/// Acceptance criterion number 1..11 of an experiment, or 0 for the extras.
int criterion_of(ExperimentKind k);

struct NumericBlock {
  std::vector<double> h;
  std::vector<double> dt;
  std::vector<double> beta;
  std::vector<double> phi;
  std::size_t n_paths = 0;
  double horizon = 1.0;
  double s = 0.5;        // semigroup time
  double delta = 0.05;   // output grid spacing
  std::size_t probes = 20;
  std::size_t checkpoints = 10;
  std::uint64_t seed = 1;
};

struct ControlBlock {
  Matrix h1;
  Matrix h2;
  Matrix running_cost;
  Matrix terminal_cost;
  std::vector<double> u;
  std::vector<double> v;
  /// Control set contained in `u` for the enlargement check.
  std::vector<double> u_subset;
  int mesh_points = 21;
  bool markov = true;
};

struct OutputBlock {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kConverge;
  HamiltonianSpec model;
  std::optional<ObservablePolynomial> observable;
  Matrix initial_state;
  NumericBlock numeric;
  ControlBlock control;
  OutputBlock output;

  /// Throws ConfigError with the offending field on inconsistent input.
  void validate() const;
  Json to_json() const;
};

/// The acceptance settings of each experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses a JSON document. Keys that are present override default_config of
/// the named experiment; unknown keys are rejected. `source` prefixes parse
/// diagnostics, which carry line and column.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

}  // namespace qfilter
