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

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qfilter/errors.hpp"

namespace qfilter {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Validation tolerances for states; one order above accumulation noise at n <= 8.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kMinEigenvalueTol = -1e-10;
inline constexpr double kPureNormTol = 1e-12;
inline constexpr double kOperatorHermitianTol = 1e-10;

// Largest lifted dimension n * 2^K accepted by tensor_lift.
inline constexpr Index kDefaultMaxLiftedDim = 1024;

Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);
Matrix kron(const Matrix& a, const Matrix& b);

/// Largest entry of |M - M^dagger|.
double hermiticity_defect(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = kOperatorHermitianTol);
double trace_real(const Matrix& m);
/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const Matrix& m);
double purity(const Matrix& m);
/// Half the trace norm of a - b (both taken Hermitian).
double trace_distance(const Matrix& a, const Matrix& b);

/// A Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  /// Throws ValidationError when m violates any state invariant.
  explicit DensityMatrix(Matrix m);

  /// Skips validation. The caller guarantees the invariants.
  static DensityMatrix trusted(Matrix m);

  static DensityMatrix basis(Index dim, Index k);
  static DensityMatrix maximally_mixed(Index dim);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

  /// tr(B rho) for Hermitian B.
  double expectation(const Matrix& b) const;

 private:
  struct TrustedTag {};
  DensityMatrix(Matrix m, TrustedTag) : m_(std::move(m)) {}
  Matrix m_;
};

/// Returns a description of the first violated invariant, or an empty string.
std::string density_matrix_violation(const Matrix& m);

/// Unit vector in C^n.
class PureState {
 public:
  explicit PureState(Vector v);
  static PureState trusted(Vector v);

  const Vector& vector() const { return v_; }
  Index dim() const { return v_.size(); }
  DensityMatrix density() const;

 private:
  struct TrustedTag {};
  PureState(Vector v, TrustedTag) : v_(std::move(v)) {}
  Vector v_;
};

/// Orthogonal projector pair on C^2 parametrized by the detection angle phi
/// (the relative phase is fixed to zero).
struct ProjectorPair {
  double phi = 0.0;
  Eigen::Matrix2d p0;
  Eigen::Matrix2d p1;
  bool diagonal = true;

  const Eigen::Matrix2d& operator[](int outcome) const { return outcome == 0 ? p0 : p1; }
};

/// Diagonal (counting) mode holds when sin(phi) cos(phi) vanishes.
bool is_diagonal_angle(double phi);
ProjectorPair projector_pair(double phi);

/// rho (x) |e0><e0| (x) ... (x) |e0><e0| with K probe factors. Basis index is
/// atom * 2^K + probe word, the first probe being the most significant bit.
Matrix tensor_lift(const DensityMatrix& rho, int probes,
                   Index max_dim = kDefaultMaxLiftedDim);

/// Trace over all K probe factors of an (n 2^K) x (n 2^K) matrix.
Matrix partial_trace_probes(const Matrix& m, int probes);

/// exp(-i t H) for Hermitian H via its eigendecomposition.
Matrix evolution_operator(const Matrix& h, double t);

/// exp(-i t H) M exp(i t H).
Matrix conjugate_by_evolution(const Matrix& m, const Matrix& h, double t);

/// Block form of the lifted state after a short evolution with the coupling
/// scaled by 1/sqrt(t), correct through order t:
///   [[rho - i t [A, rho] - t/2 {C*C, rho},  sqrt(t) rho C*],
///    [sqrt(t) C rho,                         t C rho C*    ]]
Matrix small_time_lifted_state(const DensityMatrix& rho, const Matrix& a,
                               const Matrix& c, double t);

/// Symmetrizes, clips negative eigenvalues to zero and renormalizes the
/// trace. Valid states pass through up to rounding. Throws
/// DegenerateStateError when nothing positive remains.
DensityMatrix clip_to_state(const Matrix& m);

// Random states. Haar-distributed vectors and spectra drawn from the flat
// Dirichlet distribution.
Vector random_unit_vector(Index dim, std::mt19937_64& rng);
Matrix random_unitary(Index dim, std::mt19937_64& rng);
DensityMatrix random_mixed_state(Index dim, std::mt19937_64& rng);
Matrix random_hermitian(Index dim, std::mt19937_64& rng, double scale = 1.0);
Matrix random_matrix(Index dim, std::mt19937_64& rng, double scale = 1.0);

// Pauli matrices and the transition operator |1><0| = [[0, 0], [1, 0]].
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix transition_0_to_1();

}  // namespace qfilter
