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
#include <string>
#include <vector>

#include "qfilter/chain.hpp"
#include "qfilter/observable.hpp"
#include "qfilter/qstate.hpp"

namespace qfilter {

// Counting intensities below this value switch the jump term off.
inline constexpr double kMinJumpIntensity = 1e-14;

/// Jump generator of one counting channel:
///   -(f', i[A, rho] + {C*C, rho}/2 - T rho) + T [f(C rho C*/T) - f(rho)],
/// with T = tr(C* C rho).
double eval_count(const ObservablePolynomial& f, const Matrix& rho, const Matrix& a, const Matrix& c);

/// Diffusive generator of one channel (no angle dependence):
///   [B f'' B]/2 + (f', -i[A, rho] - {C*C, rho}/2 + C rho C*),
/// with B = rho C* + C rho - omega_obs rho and omega_obs = tr(rho C* + C rho).
double eval_dif(const ObservablePolynomial& f, const Matrix& rho, const Matrix& a, const Matrix& c);

/// Multichannel generator: -(f', i[A, rho]) plus the channel terms of
/// eval_count for counting channels and of eval_dif for the others.
double eval_mix(const ObservablePolynomial& f, const Matrix& rho, const GeneratorSpec& spec);

namespace detail {

// F provides value(rho), gradient_pairing(rho, X) and hessian_form(rho, X).
template <typename F>
double count_channel(const F& f, const Matrix& rho, const Matrix& c) {
  const Matrix ctc = c.adjoint() * c;
  const double t = ctc.cwiseProduct(rho.transpose()).sum().real();
  double value = -f.gradient_pairing(rho, 0.5 * anticommutator(ctc, rho) - t * rho);
  if (t >= kMinJumpIntensity) {
    const Matrix jump = c * rho * c.adjoint() / t;
    value += t * (f.value(jump) - f.value(rho));
  }
  return value;
}

template <typename F>
double dif_channel(const F& f, const Matrix& rho, const Matrix& c) {
  const Matrix rc = rho * c.adjoint();
  const Matrix cr = c * rho;
  const double omega = (rc + cr).trace().real();
  const Matrix b = rc + cr - omega * rho;
  const Matrix drift = c * rho * c.adjoint() - 0.5 * anticommutator(c.adjoint() * c, rho);
  return 0.5 * f.hessian_form(rho, b) + f.gradient_pairing(rho, drift);
}

}  // namespace detail

/// eval_mix for any smooth function type with value, gradient_pairing and
/// hessian_form members.
template <typename F>
double eval_mix_generic(const F& f, const Matrix& rho, const GeneratorSpec& spec) {
  if (rho.rows() != spec.dim() || rho.cols() != spec.dim()) throw ShapeError("eval_mix: state dimension mismatch");
  double value = -f.gradient_pairing(rho, kI * commutator(spec.a, rho));
  for (const auto& ch : spec.channels) {
    if (ch.c.rows() != rho.rows() || ch.c.cols() != rho.cols()) {
      throw ShapeError("eval_mix: coupling dimension mismatch");
    }
    value += ch.counting() ? detail::count_channel(f, rho, ch.c) : detail::dif_channel(f, rho, ch.c);
  }
  return value;
}

/// -i[A, rho] + sum_j (C_j rho C_j* - {C_j* C_j, rho}/2).
Matrix lindblad_rhs(const Matrix& rho, const GeneratorSpec& spec);

/// Heisenberg-picture right-hand side: i[A, B] + sum_j (C_j* B C_j - {C_j* C_j, B}/2).
Matrix lindblad_adjoint_rhs(const Matrix& b, const GeneratorSpec& spec);

/// Superoperator of the master equation acting on column-stacked matrices.
Matrix liouvillian(const GeneratorSpec& spec);

/// Master-equation solution exp(s L) rho via the matrix exponential.
Matrix lindblad_evolve(const Matrix& rho, const GeneratorSpec& spec, double s);

/// Pure test states followed by Dirichlet-random mixed states. For qubits the
/// pure ones are |0>, |1>, |+>, |->, |+i>, |-i>; otherwise Haar-random.
std::vector<DensityMatrix> probe_states(Index dim, std::size_t count = 20, std::uint64_t seed = 20240611,
                                        std::size_t pure = 6);

/// (U_h f(rho) - f(rho)) / h for the given kernel.
double empirical_generator(const ObservablePolynomial& f, const DensityMatrix& rho, const ChainKernel& kernel);

/// max over probe states of |(U_h f - f)/h - L_mix f| with the exact kernel.
double empirical_generator_residual(const ObservablePolynomial& f, const GeneratorSpec& spec, double h,
                                    const std::vector<DensityMatrix>& states);

/// How a reference value T_s f was obtained.
enum class SemigroupMethod {
  kLinear,      // master-equation solution, exact for affine f
  kRenewal,     // renewal equation of counting channels with rank-one couplings
  kMonteCarlo,  // chain sampling at a fine step
};
std::string to_string(SemigroupMethod m);

struct SemigroupReference {
  SemigroupMethod method = SemigroupMethod::kLinear;
  std::vector<double> values;   // T_s f at each state
  std::vector<double> std_errors;  // zero except for Monte Carlo
};

struct SemigroupOptions {
  /// Grid intervals of the coarse renewal solve; the fine solve doubles it
  /// and the two are Richardson-combined.
  long renewal_intervals = 4096;
  /// Monte Carlo fallback.
  double mc_step = 1e-5;
  std::size_t mc_paths = 2000;
  std::uint64_t mc_seed = 7;
};

/// True when every channel counts and every coupling has rank at most one,
/// so post-jump states do not depend on the pre-jump state.
bool renewal_applicable(const GeneratorSpec& spec);

/// Reference values of the limiting semigroup T_s f at the given states.
/// Affine f uses the master equation; otherwise the renewal solver when it
/// applies and Monte Carlo sampling of the fine chain as a last resort.
SemigroupReference semigroup_reference(const ObservablePolynomial& f, const GeneratorSpec& spec, double s,
                                       const std::vector<DensityMatrix>& states,
                                       const SemigroupOptions& options = {});

/// Renewal solution on M intervals (trapezoid rule, second order).
std::vector<double> renewal_semigroup(const ObservablePolynomial& f, const GeneratorSpec& spec, double s,
                                      const std::vector<DensityMatrix>& states, long intervals);

/// Deterministic hash of A, B and the channels, printed in residual tables.
std::string spec_hash(const HamiltonianSpec& spec);

struct ResidualRow {
  double h = 0.0;
  double residual = 0.0;
};

/// CSV with header h,residual,channel_config_hash.
std::string residual_table_csv(const std::vector<ResidualRow>& rows, const std::string& hash);

}  // namespace qfilter
