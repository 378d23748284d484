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
#include "qfilter/observable.hpp"
#include "qfilter/parallel.hpp"
#include "qfilter/sde.hpp"
#include "qfilter/stats.hpp"
#include "qfilter/waiting.hpp"

namespace qfilter {

// Normalization: the beta-stable subordinator S has E exp(-lambda S_t) =
// exp(-t lambda^beta), so S_t / t -> 1 as beta -> 1. The inverse is
// sigma_t = max{s : S_s <= t}.

/// One draw of S_1 from the uniform-plus-exponential representation
///   Z = sin(beta U) / sin(U)^(1/beta) * (sin((1 - beta) U) / E)^((1 - beta)/beta),
/// U uniform on (0, pi), E standard exponential.
double sample_stable(double beta, std::mt19937_64& rng);

/// sigma_t drawn directly as (t / S_1)^beta.
double sample_inverse_stable(double beta, double t, std::mt19937_64& rng);

struct SubordinatorPath {
  std::vector<double> grid;    // increasing, grid[0] = 0
  std::vector<double> values;  // nondecreasing, values[0] = 0
  double beta = 0.5;
};

/// Exact independent increments (ds)^(1/beta) Z on every grid cell.
SubordinatorPath simulate_subordinator(double beta, const std::vector<double>& t_grid, std::mt19937_64& rng);

/// Path on the grid k ds, extended until it first exceeds level.
SubordinatorPath simulate_subordinator_until(double beta, double ds, double level, std::mt19937_64& rng);

/// Right-continuous inverse on the sampled path: the largest grid time whose
/// value does not exceed t. Throws RangeError when the path never exceeds t.
double inverse_subordinator(const SubordinatorPath& path, double t);

/// Scale for stable_tail waiting times that makes h N_t^h converge to
/// sigma_t: the unscaled law has tail 1/(beta m^beta), which gives Laplace
/// exponent Gamma(1 - beta)/beta lambda^beta, so scale = h beta / Gamma(1 - beta).
double ctrw_scale(double beta, double h);

/// N_t = max{n : T_1 + ... + T_n <= t} for i.i.d. waiting times.
long ctrw_event_count(const WaitingLaw& law, double t, std::mt19937_64& rng);

/// Uniform time grid with its values.
struct TimeSeries {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  static TimeSeries uniform(double dt, std::size_t points);
  /// Throws FormatError when the grid is not uniform or too short.
  void check_uniform(std::size_t min_points) const;
};

/// L1 scheme for the Caputo derivative of order beta in (0, 1]:
///   D f(t_n) = dt^-beta / Gamma(2 - beta) sum_k b_k (f_(n-k) - f_(n-k-1)),
///   b_k = (k + 1)^(1-beta) - k^(1-beta).
/// Exact for piecewise-linear data; beta = 1 is the backward difference.
/// The output lives on the grid points 1..N.
TimeSeries caputo_derivative(const TimeSeries& series, double beta);

/// Mixed operator
///   int_0^t (f_(t-s) - f_t) nu(ds) + (f_0 - f_t) int_t^inf nu(ds),
/// nu(ds) = sum_i w_i s^(-1-beta_i) ds, integrated exactly for the
/// piecewise-linear interpolant. The tail is sum_i w_i t^-beta_i / beta_i.
/// For a single component it equals -Gamma(1 - beta)/beta times
/// caputo_derivative. Output on grid points 1..N.
TimeSeries mixed_caputo(const TimeSeries& series, const WaitingLaw& law);

/// int_t^inf nu(ds) for the mixture measure.
double mixture_tail(const WaitingLaw& law, double t);

struct FractionalPoint {
  double t = 0.0;
  double lhs = 0.0;       // Caputo derivative of g
  double rhs = 0.0;       // L g
  double residual = 0.0;  // lhs - rhs
};

struct FractionalReport {
  double relative_residual = 0.0;  // max |lhs - rhs| / max |rhs|
  double max_residual = 0.0;
  std::vector<FractionalPoint> points;
  /// Columns t,caputo,generator,residual.
  std::string to_csv() const;
};

/// Compares caputo_derivative(g, beta) with Lg on grid points 1..N.
FractionalReport verify_fractional_equation(const TimeSeries& g, const TimeSeries& lg, double beta);

/// Per-path samples of f(rho_(sigma_t)) and (L_mix f)(rho_(sigma_t)) on a grid.
struct SubordinatedSamples {
  TimeSeries grid;                        // times only
  std::vector<std::vector<double>> f;     // [path][point]
  std::vector<std::vector<double>> lf;    // [path][point]
  std::size_t failed_paths = 0;

  TimeSeries mean_f() const;
  TimeSeries mean_lf() const;
  std::vector<double> std_error_f() const;
};

/// Each path draws its own subordinator on the SDE grid (ds = dt), then runs
/// the SDE on the internal clock and reads the state at sigma_t for every
/// grid time. With beta = 1 the clock is not changed (sigma_t = t).
SubordinatedSamples subordinated_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                         const SdeIntegrator& integrator, double beta, const TimeSeries& grid,
                                         std::size_t n_paths, std::uint64_t base_seed,
                                         Execution exec = Execution::kOpenMP);

/// g(t) = E f(rho_(sigma_t)) on the grid.
TimeSeries subordinated_expectation(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                    const SdeIntegrator& integrator, double beta, const TimeSeries& grid,
                                    std::size_t n_paths, std::uint64_t base_seed,
                                    Execution exec = Execution::kOpenMP);

/// f(rho_t) samples at t from the subordinated SDE with sigma_t drawn exactly.
std::vector<double> subordinated_final_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                               const SdeIntegrator& integrator, double beta, double t,
                                               std::size_t n_paths, std::uint64_t base_seed,
                                               Execution exec = Execution::kOpenMP);

/// f(state at t) samples from the chain with kernel step h and stable_tail
/// waiting times at ctrw_scale(beta, h).
std::vector<double> ctrw_chain_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                       const HamiltonianSpec& spec, double h, double beta, double t,
                                       std::size_t n_paths, std::uint64_t base_seed,
                                       Execution exec = Execution::kOpenMP);

}  // namespace qfilter
