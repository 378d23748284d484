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

#include "qfilter/observable.hpp"
#include "qfilter/qstate.hpp"
#include "qfilter/waiting.hpp"

namespace qfilter {

/// Coupling operator of one observation channel and its detection angle.
/// Angles with sin(phi) cos(phi) = 0 select counting detection, all others
/// diffusive detection.
struct ChannelSpec {
  Matrix c;
  double phi = 0.0;

  bool counting() const { return is_diagonal_angle(phi); }
};

/// Atom Hamiltonian A, optional probe block B and the observation channels.
///
/// Without B the free part is A on every probe sector. With B the free part
/// is A on the vacuum sector and B on every other sector.
struct HamiltonianSpec {
  Matrix a;
  std::optional<Matrix> b;
  std::vector<ChannelSpec> channels;

  Index dim() const { return a.rows(); }
  int probes() const { return static_cast<int>(channels.size()); }
  /// Throws ValidationError or ShapeError on inconsistent input.
  void validate() const;
};

/// The limiting generators see only A and the channels.
using GeneratorSpec = HamiltonianSpec;

/// Bit string i_1 ... i_K, first channel most significant.
using OutcomeWord = std::uint32_t;
std::string format_word(OutcomeWord w, int probes);

struct Outcome {
  OutcomeWord word = 0;
  double probability = 0.0;
  DensityMatrix state;
};

/// Possible results of one interaction-plus-measurement step.
struct OutcomeDistribution {
  std::vector<Outcome> outcomes;
  double total_probability() const;
};

// Outcomes below this probability are dropped and the rest renormalized.
inline constexpr double kDropProbability = 1e-14;
// Asymptotic probabilities below minus this value signal a step too large.
inline constexpr double kNegativeProbabilityTol = 1e-12;

/// How the interaction strength depends on the step duration t.
enum class CouplingScaling {
  kInverseSqrtStep,  // C / sqrt(t), the scaling of the limit theorems
  kUnscaled,         // C as given; used for the Zeno check
};

enum class KernelMode { kExact, kAsymptotic };

/// Full Hamiltonian on C^n (x) (C^2)^K for a step of duration t.
Matrix lifted_hamiltonian(const HamiltonianSpec& spec, double t,
                          CouplingScaling scaling = CouplingScaling::kInverseSqrtStep);

/// Transition kernel of the measurement chain at step duration t.
///
/// Exact mode evolves the lifted state with exp(-itH) and applies every
/// projector word. The non-normalized post-state for word w is
///   sum_u K_wu rho K_wu^dagger,
/// where K_wu is the probe-u block of (I (x) P_w) exp(-itH) restricted to the
/// vacuum sector. Asymptotic mode expands the same blocks in s = sqrt(t) and
/// keeps all terms of total order t:
///   V_0 = I - i t A - t/2 sum_j C_j* C_j,  V_ej = sqrt(t) C_j,
///   V_(ej+ek) = t/2 {C_j, C_k}.
class ChainKernel {
 public:
  ChainKernel(HamiltonianSpec spec, double t, KernelMode mode = KernelMode::kExact,
              CouplingScaling scaling = CouplingScaling::kInverseSqrtStep);

  OutcomeDistribution step(const DensityMatrix& rho) const;
  /// Outcome probabilities tr(E_w rho) for every word, without post-states.
  std::vector<double> probabilities(const Matrix& rho) const;
  /// Draws one outcome with the uniform variate u in [0, 1) and returns it
  /// with its normalized post-state.
  Outcome sample(const DensityMatrix& rho, double u) const;
  /// Non-selective map rho -> sum_w rho~_w.
  Matrix average(const Matrix& rho) const;
  /// Non-normalized post-state rho~_w.
  Matrix unnormalized(const Matrix& rho, OutcomeWord w) const;

  const HamiltonianSpec& spec() const { return spec_; }
  double step_duration() const { return t_; }
  KernelMode mode() const { return mode_; }
  int words() const { return 1 << spec_.probes(); }

 private:
  struct Block {
    OutcomeWord probe = 0;  // probe word u
    int orders[3];          // V_u = sum_k s^k pool_[orders[k]]
  };

  HamiltonianSpec spec_;
  double t_;
  KernelMode mode_;
  std::vector<std::vector<Matrix>> kraus_;  // exact: per outcome word
  // Asymptotic post-state as sum of coef * L rho R^dagger; index -1 stands
  // for the identity.
  struct Term {
    double coef = 0.0;
    int left = -1;
    int right = -1;
  };
  std::vector<Matrix> pool_;
  std::vector<Matrix> pool_adjoint_;
  std::vector<std::vector<Term>> terms_;    // asymptotic, per outcome word
  std::vector<Eigen::MatrixXd> word_projectors_;  // P_w on (C^2)^K
  std::vector<Matrix> effects_;                   // E_w, p_w = tr(E_w rho)

  DensityMatrix normalized(const Matrix& unnormalized, double p) const;
};

/// Exact transition of the chain with the coupling scaled by 1/sqrt(t).
OutcomeDistribution step_exact(const DensityMatrix& rho, const HamiltonianSpec& spec, double t);

/// Order-t outcome distribution built without the lifted space. Post-states
/// that leave the state space by more than rounding are clipped back.
/// Throws StepSizeError when a probability is negative.
OutcomeDistribution step_asymptotic(const DensityMatrix& rho, const HamiltonianSpec& spec, double t);

/// (U_t f)(rho) = sum_w p_w f(rho_w) with the exact kernel.
double transition_operator(const ObservablePolynomial& f, const DensityMatrix& rho,
                           const HamiltonianSpec& spec, double t);
double transition_operator(const ObservablePolynomial& f, const DensityMatrix& rho,
                           const ChainKernel& kernel);

/// E f(rho_n) after n chain steps from rho, by exact propagation of the
/// weighted cloud of reachable states. States closer than merge_tol in every
/// entry are merged. Throws SizingError when the cloud exceeds max_states.
double expected_after_steps(const ObservablePolynomial& f, const DensityMatrix& rho,
                            const ChainKernel& kernel, long steps, double merge_tol = 1e-10,
                            std::size_t max_states = 200000);

/// One simulated run of the chain.
struct TrajectoryRecord {
  static constexpr OutcomeWord kNoOutcome = 0xFFFFFFFFu;

  std::vector<double> times;          // strictly increasing from 0
  std::vector<DensityMatrix> states;  // state after each event
  std::vector<OutcomeWord> outcomes;  // kNoOutcome at time 0
  std::vector<double> waits;          // waiting time before each event, 0 at time 0
  int probes = 0;
  std::uint64_t seed = 0;
  /// Number of chain steps taken. Equals times.size() - 1 unless only the
  /// endpoints were kept.
  std::size_t event_count = 0;

  std::size_t events() const { return event_count; }
  /// State at time s: the state after the last event not later than s.
  const DensityMatrix& state_at(double s) const;

  /// Columns: step,time,outcome_word,wait, then re_ij,im_ij row-major.
  std::string to_csv() const;
  std::string to_json() const;
};

struct TrajectoryOptions {
  KernelMode mode = KernelMode::kExact;
  /// Stop early once this many events occurred (guards heavy-tail runs with
  /// tiny waits); 0 disables the cap.
  std::size_t max_events = 0;
  /// Keep only the initial and the final entry of the path.
  bool endpoints_only = false;
};

/// Runs the chain with kernel step h and clock advanced by waiting times drawn
/// from the given law until the next event would fall after the horizon.
TrajectoryRecord sample_trajectory(const DensityMatrix& rho0, const ChainKernel& kernel,
                                   const WaitingLaw& waiting, double horizon,
                                   std::uint64_t seed, const TrajectoryOptions& options = {});
TrajectoryRecord sample_trajectory(const DensityMatrix& rho0, const HamiltonianSpec& spec,
                                   double h, const WaitingLaw& waiting, double horizon,
                                   std::uint64_t seed, const TrajectoryOptions& options = {});

/// Draws one outcome from a distribution with the uniform variate u in [0, 1).
const Outcome& pick_outcome(const OutcomeDistribution& dist, double u);

}  // namespace qfilter
