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
#include <random>
#include <string>
#include <vector>

#include "qfilter/chain.hpp"
#include "qfilter/parallel.hpp"
#include "qfilter/qstate.hpp"

namespace qfilter {

/// Time discretization of the filtering equations.
///
/// kEulerMaruyama applies drift dt + diffusion dW literally. kDriftRk4DiffusionEuler
/// integrates the drift with one RK4 step and adds the Euler diffusion term.
/// kKrausMap applies rho -> M rho M^dagger / tr(M rho M^dagger) with
///   M = I + G dt + sum_j C_j dY_j + 1/2 sum_jk C_j C_k (dY_j dY_k - delta_jk dt),
/// G = -iA - 1/2 sum_j C_j* C_j and dY_j = dW_j + omega_j dt over the
/// diffusive channels, which keeps states positive and pure states pure.
enum class SdeScheme { kEulerMaruyama, kDriftRk4DiffusionEuler, kKrausMap };
std::string to_string(SdeScheme s);
SdeScheme parse_scheme(const std::string& name);

struct SdeConfig {
  GeneratorSpec spec;
  double dt = 1e-3;
  SdeScheme scheme = SdeScheme::kKrausMap;
  /// Symmetrize, clip and renormalize after every step.
  bool projection = true;

  void validate() const;
};

/// Noise of one step: a Gaussian increment for every diffusive channel and a
/// uniform thinning variate for every counting channel, indexed by channel.
struct NoiseIncrement {
  std::vector<double> dw;
  std::vector<double> uniform;
};
NoiseIncrement draw_noise(const GeneratorSpec& spec, double dt, std::mt19937_64& rng);

// Coefficients of the single-channel equations.
/// -i[A, rho] - {C*C, rho}/2 + tr(C rho C*) rho.
Matrix counting_drift(const Matrix& rho, const Matrix& a, const Matrix& c);
/// -i[A, rho] - {C*C, rho}/2 + C rho C*.
Matrix diffusive_drift(const Matrix& rho, const Matrix& a, const Matrix& c);
/// rho C* + C rho - tr(rho C* + C rho) rho.
Matrix diffusion_coefficient(const Matrix& rho, const Matrix& c);
/// tr(rho C* + C rho).
double omega_obs(const Matrix& rho, const Matrix& c);
/// Drift of the multichannel equation: counting terms for counting channels
/// and diffusive terms for the others.
Matrix mixed_drift(const Matrix& rho, const GeneratorSpec& spec);

/// Symmetrizes, clips eigenvalues at zero and renormalizes. Valid states are
/// returned unchanged. Throws DegenerateStateError when the trace vanishes.
DensityMatrix project_to_state(const Matrix& m);

/// One step of the counting equation with thinning variate u in [0, 1): a
/// jump to C rho C*/T when u < dt T, otherwise the no-jump flow. Throws
/// StepSizeError when dt T >= 1.
Matrix step_counting_raw(const Matrix& rho, const Matrix& a, const Matrix& c, double dt, double u,
                         SdeScheme scheme = SdeScheme::kEulerMaruyama);
DensityMatrix step_counting(const DensityMatrix& rho, const Matrix& a, const Matrix& c, double dt,
                            std::mt19937_64& rng, SdeScheme scheme = SdeScheme::kEulerMaruyama);

/// One step of the diffusive equation with Wiener increment dw.
Matrix step_diffusive_raw(const Matrix& rho, const Matrix& a, const Matrix& c, double dt, double dw,
                          SdeScheme scheme = SdeScheme::kEulerMaruyama);
DensityMatrix step_diffusive(const DensityMatrix& rho, const Matrix& a, const Matrix& c, double dt, double dw,
                             SdeScheme scheme = SdeScheme::kEulerMaruyama);

/// One step of the multichannel equation. At most one counting channel jumps
/// per step (the first in channel order whose thinning test fires).
Matrix step_mixed_raw(const Matrix& rho, const GeneratorSpec& spec, double dt, const NoiseIncrement& noise,
                      SdeScheme scheme = SdeScheme::kKrausMap);
DensityMatrix step_mixed(const DensityMatrix& rho, const GeneratorSpec& spec, double dt,
                         const NoiseIncrement& noise, SdeScheme scheme = SdeScheme::kKrausMap);

/// Euler-Maruyama step of the pure-state filtering equation
///   dphi = [-iA - C*C/2 + r C - r^2/2] phi dt + (C - r) phi dW,
/// r = Re (phi, C phi), followed by renormalization. For Hermitian C this is
/// dphi = -[iA + (C - <C>)^2 / 2] phi dt + (C - <C>) phi dW.
PureState step_pure(const PureState& psi, const Matrix& a, const Matrix& c, double dt, double dw);

struct LinearStep {
  Matrix xi;          // non-normalized state after the step
  DensityMatrix rho;  // xi / tr xi
  double dw = 0.0;    // dY - tr(xi C* + C xi) / tr(xi) dt, taken at the start of the step
};

/// Step of the linear (non-normalized) equation
///   dxi = (-i[A, xi] - {C*C, xi}/2 + C xi C*) dt + (xi C* + C xi) dY.
/// Euler-Maruyama, or with milstein = true the additional term
///   (xi C*^2 + 2 C xi C* + C^2 xi)(dY^2 - dt)/2.
/// Throws IntegrationFailure when tr xi is not positive.
LinearStep step_linear(const Matrix& xi, const Matrix& a, const Matrix& c, double dt, double dy,
                       bool milstein = false);

/// Integrates the multichannel equation under one configuration.
class SdeIntegrator {
 public:
  explicit SdeIntegrator(SdeConfig config);

  const SdeConfig& config() const { return config_; }

  /// One step of length dt (defaults to the configured step).
  Matrix step(const Matrix& rho, const NoiseIncrement& noise, double dt) const;
  Matrix step(const Matrix& rho, std::mt19937_64& rng) const;

  /// State at internal time s; the last step is shortened to land on s.
  Matrix evolve(const Matrix& rho0, double s, std::mt19937_64& rng) const;

  /// States at the checkpoint times, which must be nondecreasing.
  std::vector<Matrix> evolve_to(const Matrix& rho0, const std::vector<double>& checkpoints,
                                std::mt19937_64& rng) const;

 private:
  Matrix finish(Matrix m) const;
  SdeConfig config_;
};

/// Mean and standard error of tr(B rho_t) over an ensemble.
struct EnsemblePoint {
  double t = 0.0;
  std::size_t observable = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
};

struct EnsembleResult {
  std::vector<EnsemblePoint> points;
  std::size_t failed_paths = 0;
  /// Columns t,observable,mean,stderr,n_paths.
  std::string to_csv() const;
};

/// Runs n_paths trajectories from rho0 with seeds base_seed + index and
/// averages tr(B_k rho) at every checkpoint. Paths that hit an integration
/// failure are discarded and counted.
EnsembleResult ensemble_mean(const SdeIntegrator& integrator, const DensityMatrix& rho0,
                             const std::vector<Matrix>& observables, const std::vector<double>& checkpoints,
                             std::size_t n_paths, std::uint64_t base_seed, Execution exec = Execution::kOpenMP);

/// One RK4 step of the counting no-jump drift summed over all channels:
///   -i[A, rho] + sum_j (-{C_j*C_j, rho}/2 + tr(C_j rho C_j*) rho).
Matrix counting_drift_rk4_step(const Matrix& rho, const GeneratorSpec& spec, double dt);

/// Smallest eigenvalue met while integrating the counting drift flow with
/// RK4 and no projection over [0, horizon].
double drift_flow_min_eigenvalue(const Matrix& rho0, const GeneratorSpec& spec, double dt, double horizon);

}  // namespace qfilter
