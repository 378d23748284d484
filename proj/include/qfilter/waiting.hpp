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

#include <random>
#include <string>
#include <vector>

namespace qfilter {

/// One stable component of a mixture law: weight w and index beta.
struct StableComponent {
  double weight = 1.0;
  double beta = 0.5;
};

/// Distribution of the time between two successive measurements.
///
/// stable_tail draws T with P(T > m) = (1 + beta^(1/beta) m)^(-beta), so that
/// P(T > m) ~ 1 / (beta m^beta), and returns scale^(1/beta) T. A mixture picks
/// one stable component at random with probability w_i.
struct WaitingLaw {
  enum class Kind { kDegenerate, kExponential, kStableTail, kMixture };

  Kind kind = Kind::kDegenerate;
  double step = 1.0;   // degenerate
  double rate = 1.0;   // exponential
  double beta = 0.5;   // stable_tail
  double scale = 1.0;  // stable_tail, mixture
  std::vector<StableComponent> components;  // mixture

  static WaitingLaw degenerate(double h);
  static WaitingLaw exponential(double rate);
  static WaitingLaw stable_tail(double beta, double scale);
  static WaitingLaw mixture(std::vector<StableComponent> components, double scale);

  /// Throws ValidationError when parameters are out of range.
  void validate() const;
  std::string name() const;
};

/// Survival function P(T > m) of the unscaled stable_tail law.
double stable_tail_survival(double beta, double m);

/// Draws one positive waiting time. Non-finite draws are resampled.
double sample_waiting(const WaitingLaw& law, std::mt19937_64& rng);

}  // namespace qfilter
