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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qfilter/chain.hpp"
#include "qfilter/parallel.hpp"
#include "qfilter/stats.hpp"
#include "qfilter/waiting.hpp"

namespace qfilter {

/// Zero-sum game on the measurement chain. Player I picks u from u_grid to
/// maximize and player II picks v from v_grid to minimize
///   E [ int_0^T tr(J rho_s) ds + tr(F rho_T) ],
/// where the atom Hamiltonian between measurements is H0 + u H1 + v H2.
struct ControlProblem {
  Matrix h0;
  Matrix h1;
  Matrix h2;
  std::vector<double> u_grid{0.0};
  std::vector<double> v_grid{0.0};
  Matrix running_cost;   // J
  Matrix terminal_cost;  // F
  double horizon = 1.0;
  /// Markov chain with one measurement every h when true; otherwise the
  /// waiting times are stable_tail(beta, ctrw_scale(beta, h)).
  bool markov = true;
  double beta = 0.7;
  /// Transition kernel of the chain. The exact kernel keeps every post-state
  /// a valid density matrix, so the recursion and the sampled chain agree.
  KernelMode kernel = KernelMode::kExact;

  void validate() const;
  Matrix hamiltonian(double u, double v) const;
};

/// Finite set of states carrying the value function.
class StateMesh {
 public:
  virtual ~StateMesh() = default;
  virtual std::size_t size() const = 0;
  virtual Index dim() const = 0;
  /// Trace-one Hermitian matrix attached to node k. Not necessarily positive.
  virtual const Matrix& node(std::size_t k) const = 0;
  /// Interpolates node values at rho. When given, *outside reports whether rho
  /// fell outside the mesh hull so that an extrapolation or fallback was used.
  virtual double interpolate(const std::vector<double>& values, const Matrix& rho, bool* outside = nullptr) const = 0;
  virtual std::string describe() const = 0;
};

/// Qubit mesh: Cartesian lattice with `points` nodes per axis on the cube
/// [-1, 1]^3 of Bloch vectors, trilinear interpolation. Nodes outside the
/// unit ball carry the trace-one Hermitian matrix with that Bloch vector, so
/// the recursion extends affinely past the state space. Points outside the
/// cube are extrapolated from the nearest boundary cell.
class BlochGridMesh final : public StateMesh {
 public:
  explicit BlochGridMesh(int points);
  std::size_t size() const override { return nodes_.size(); }
  Index dim() const override { return 2; }
  const Matrix& node(std::size_t k) const override { return nodes_[k]; }
  double interpolate(const std::vector<double>& values, const Matrix& rho, bool* outside = nullptr) const override;
  std::string describe() const override;
  int points() const { return points_; }
  double spacing() const { return 2.0 / (points_ - 1); }

 private:
  int points_;
  std::vector<Matrix> nodes_;
};

/// Any dimension: a fixed sample of states with nearest-node lookup in the
/// Frobenius norm. Coarse; intended for n > 2 only.
class SampleMesh final : public StateMesh {
 public:
  SampleMesh(Index dim, std::size_t count, std::uint64_t seed);
  std::size_t size() const override { return states_.size(); }
  Index dim() const override { return dim_; }
  const Matrix& node(std::size_t k) const override { return states_[k].matrix(); }
  double interpolate(const std::vector<double>& values, const Matrix& rho, bool* outside = nullptr) const override;
  std::string describe() const override;

 private:
  Index dim_;
  std::vector<DensityMatrix> states_;
};

/// True when node k is a density matrix (no eigenvalue below -1e-12).
/// Lattice nodes outside the Bloch ball are not.
bool is_state_node(const StateMesh& mesh, std::size_t k);

/// Bloch vector (tr(sigma_x rho), tr(sigma_y rho), tr(sigma_z rho)).
Eigen::Vector3d bloch_vector(const Matrix& rho);
Matrix state_from_bloch(const Eigen::Vector3d& r);

/// Expected occupation time w_n of the n-th post-measurement state within
/// [0, T] and probability pi_n that exactly n measurements happened by T.
struct EventWeights {
  std::vector<double> occupation;
  std::vector<double> terminal;
};

/// Markov: w_n = h for n < N = round(T/h), pi_N = 1. Fractional: Monte Carlo
/// over waiting times, truncated where the count exceeds its quantile
/// 1 - tail_mass; the remainder is folded into the last index.
EventWeights event_weights(const ControlProblem& problem, double h, std::size_t samples = 20000,
                           std::uint64_t seed = 11, double tail_mass = 1e-4);

/// Value function by measurement count n = 0..n_max on the mesh, with the
/// chosen controls.
struct ValueTable {
  std::vector<std::vector<double>> values;  // [n][node]
  std::vector<std::vector<int>> u_index;    // [n][node], -1 on the last layer
  std::vector<std::vector<int>> v_index;
  EventWeights weights;
  double h = 0.0;
  /// Largest max-min minus min-max over all layers and nodes (should be <= 0).
  double isaacs_gap = 0.0;
  std::size_t extrapolations = 0;
  std::string mesh;

  std::size_t layers() const { return values.size(); }
  std::string to_json() const;
};

/// Backward induction
///   V_n(rho) = w_n tr(J rho) + pi_n tr(F rho)
///              + max_u min_v sum_w p_w(rho; u, v) V_(n+1)(rho_w),
/// with problem.kernel at step h for the Hamiltonian H0 + u H1 + v H2
/// and the channels of spec. Ties go to the lowest control index.
ValueTable dp_solve(const ControlProblem& problem, const HamiltonianSpec& spec, double h, const StateMesh& mesh,
                    Execution exec = Execution::kOpenMP);

/// Control choice (u index, v index) after n measurements in state rho.
using Policy = std::function<std::pair<int, int>(std::size_t n, const Matrix& rho)>;

/// Always the given indices.
Policy constant_policy(int u_index, int v_index);
/// One-step lookahead on the value table (same rule as dp_solve).
Policy dp_policy(const ControlProblem& problem, const HamiltonianSpec& spec, double h, const StateMesh& mesh,
                 std::shared_ptr<const ValueTable> table);

/// Monte Carlo estimate of the payoff from rho0 under a policy. The chain
/// uses problem.kernel at step h; waiting times follow the problem.
MeanSe evaluate_policy_mc(const ControlProblem& problem, const HamiltonianSpec& spec, double h,
                          const DensityMatrix& rho0, const Policy& policy, std::size_t n_paths,
                          std::uint64_t base_seed, Execution exec = Execution::kOpenMP);

struct HjbPoint {
  double tau = 0.0;     // time to go
  std::size_t state = 0;
  double lhs = 0.0;     // fractional (or backward) time derivative of S
  double rhs = 0.0;     // Hamiltonian terms plus L_mix S
  double residual = 0.0;
};

struct HjbReport {
  std::vector<HjbPoint> points;
  double max_residual = 0.0;
  /// Budget: mesh interpolation (second difference of S over the lattice)
  /// plus the L1 term (difference between steps delta and 2 delta).
  double budget = 0.0;
  std::string to_csv() const;
};

/// S at the probe states for time-to-go tau_k = k delta, k = 0..K, from
/// separate dp_solve runs (or layers of one Markov run).
struct ValueSeries {
  double delta = 0.0;
  std::vector<std::vector<double>> at_probes;  // [k][probe]
  std::vector<std::shared_ptr<const ValueTable>> tables;
  std::vector<DensityMatrix> probes;
};

ValueSeries value_series(const ControlProblem& problem, const HamiltonianSpec& spec, double h,
                         const BlochGridMesh& mesh, double delta, std::size_t steps,
                         const std::vector<DensityMatrix>& probes, Execution exec = Execution::kOpenMP);

/// Residual of
///   D^beta S = max_u (S', i[rho, u H1]) + min_v (S', i[rho, v H2]) + tr(J rho) + L_mix S
/// at the probe states, with L_mix built from A = H0 and the channels of
/// spec. Gradients and Hessians come from central differences of the
/// interpolated value with step equal to the lattice spacing. beta = 1 uses
/// the backward difference.
HjbReport hjb_residual(const ControlProblem& problem, const HamiltonianSpec& spec, const BlochGridMesh& mesh,
                       const ValueSeries& series, double beta);

}  // namespace qfilter
