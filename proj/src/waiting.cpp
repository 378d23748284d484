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

#include "qfilter/waiting.hpp"

#include <cmath>
#include <sstream>

#include "qfilter/errors.hpp"

namespace qfilter {
namespace {

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("WaitingLaw: beta must lie in (0, 1)");
}

// Inverse of the survival function at u in (0, 1].
double stable_tail_quantile(double beta, double u) {
  return (std::pow(u, -1.0 / beta) - 1.0) / std::pow(beta, 1.0 / beta);
}

double open_uniform(std::mt19937_64& rng) {
  // (0, 1]: never zero, so the quantile stays finite.
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

WaitingLaw WaitingLaw::degenerate(double h) {
  WaitingLaw w;
  w.kind = Kind::kDegenerate;
  w.step = h;
  w.validate();
  return w;
}

WaitingLaw WaitingLaw::exponential(double rate) {
  WaitingLaw w;
  w.kind = Kind::kExponential;
  w.rate = rate;
  w.validate();
  return w;
}

WaitingLaw WaitingLaw::stable_tail(double beta, double scale) {
  WaitingLaw w;
  w.kind = Kind::kStableTail;
  w.beta = beta;
  w.scale = scale;
  w.validate();
  return w;
}

WaitingLaw WaitingLaw::mixture(std::vector<StableComponent> components, double scale) {
  WaitingLaw w;
  w.kind = Kind::kMixture;
  w.components = std::move(components);
  w.scale = scale;
  w.validate();
  return w;
}

void WaitingLaw::validate() const {
  switch (kind) {
    case Kind::kDegenerate:
      if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("WaitingLaw: step must be positive");
      break;
    case Kind::kExponential:
      if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("WaitingLaw: rate must be positive");
      break;
    case Kind::kStableTail:
      check_beta(beta);
      if (!(scale > 0.0)) throw ValidationError("WaitingLaw: scale must be positive");
      break;
    case Kind::kMixture: {
      if (components.empty()) throw ValidationError("WaitingLaw: mixture needs components");
      if (!(scale > 0.0)) throw ValidationError("WaitingLaw: scale must be positive");
      double total = 0.0;
      for (const auto& c : components) {
        check_beta(c.beta);
        if (!(c.weight > 0.0)) throw ValidationError("WaitingLaw: mixture weights must be positive");
        total += c.weight;
      }
      if (std::abs(total - 1.0) > 1e-12) throw ValidationError("WaitingLaw: mixture weights must sum to 1");
      break;
    }
  }
}

std::string WaitingLaw::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kDegenerate:
      os << "degenerate(" << step << ")";
      break;
    case Kind::kExponential:
      os << "exponential(" << rate << ")";
      break;
    case Kind::kStableTail:
      os << "stable_tail(" << beta << "," << scale << ")";
      break;
    case Kind::kMixture:
      os << "mixture(" << components.size() << "," << scale << ")";
      break;
  }
  return os.str();
}

double stable_tail_survival(double beta, double m) {
  check_beta(beta);
  if (m <= 0.0) return 1.0;
  return std::pow(1.0 + std::pow(beta, 1.0 / beta) * m, -beta);
}

double sample_waiting(const WaitingLaw& law, std::mt19937_64& rng) {
  for (;;) {
    double tau = 0.0;
    switch (law.kind) {
      case WaitingLaw::Kind::kDegenerate:
        return law.step;
      case WaitingLaw::Kind::kExponential:
        tau = std::exponential_distribution<double>(law.rate)(rng);
        break;
      case WaitingLaw::Kind::kStableTail:
        tau = std::pow(law.scale, 1.0 / law.beta) * stable_tail_quantile(law.beta, open_uniform(rng));
        break;
      case WaitingLaw::Kind::kMixture: {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::size_t i = 0;
        while (i + 1 < law.components.size() && u >= law.components[i].weight) {
          u -= law.components[i].weight;
          ++i;
        }
        const double b = law.components[i].beta;
        tau = std::pow(law.scale, 1.0 / b) * stable_tail_quantile(b, open_uniform(rng));
        break;
      }
    }
    if (std::isfinite(tau) && tau > 0.0) return tau;
  }
}

}  // namespace qfilter
