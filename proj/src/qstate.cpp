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

#include "qfilter/qstate.hpp"

#include <cmath>
#include <sstream>

namespace qfilter {

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double hermiticity_defect(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("hermiticity_defect: matrix is not square");
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

double trace_real(const Matrix& m) { return m.trace().real(); }

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    // Closed form for the Hermitian part of a 2x2 matrix.
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const Complex b = 0.5 * (m(0, 1) + std::conj(m(1, 0)));
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
  }
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double purity(const Matrix& m) { return (m * m).trace().real(); }

double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix d = a - b;
  const Matrix h = 0.5 * (d + d.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::string density_matrix_violation(const Matrix& m) {
  std::ostringstream os;
  if (m.rows() == 0 || m.rows() != m.cols()) {
    os << "state must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    return os.str();
  }
  if (!m.allFinite()) return "state has non-finite entries";
  const double herm = hermiticity_defect(m);
  if (herm > kHermitianTol) {
    os << "state is not Hermitian (defect " << herm << ")";
    return os.str();
  }
  const double tr = std::abs(m.trace() - Complex(1.0, 0.0));
  if (tr > kTraceTol) {
    os << "state trace differs from 1 by " << tr;
    return os.str();
  }
  const double lmin = min_eigenvalue(m);
  if (lmin < kMinEigenvalueTol) {
    os << "state has negative eigenvalue " << lmin;
    return os.str();
  }
  return {};
}

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  if (auto why = density_matrix_violation(m_); !why.empty()) throw ValidationError(why);
}

DensityMatrix DensityMatrix::trusted(Matrix m) { return DensityMatrix(std::move(m), TrustedTag{}); }

DensityMatrix DensityMatrix::basis(Index dim, Index k) {
  if (k < 0 || k >= dim) throw RangeError("DensityMatrix::basis: index out of range");
  Matrix m = Matrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return trusted(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (dim <= 0) throw ShapeError("DensityMatrix::maximally_mixed: dimension must be positive");
  return trusted(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::expectation(const Matrix& b) const { return (b * m_).trace().real(); }

PureState::PureState(Vector v) : v_(std::move(v)) {
  if (v_.size() == 0) throw ValidationError("pure state must be non-empty");
  if (std::abs(v_.norm() - 1.0) > kPureNormTol) throw ValidationError("pure state must have unit norm");
}

PureState PureState::trusted(Vector v) { return PureState(std::move(v), TrustedTag{}); }

DensityMatrix PureState::density() const { return DensityMatrix::trusted(v_ * v_.adjoint()); }

bool is_diagonal_angle(double phi) {
  return std::abs(std::sin(phi) * std::cos(phi)) < 1e-12;
}

ProjectorPair projector_pair(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  ProjectorPair pp;
  pp.phi = phi;
  pp.p0 << c * c, s * c, s * c, s * s;
  pp.p1 << s * s, -s * c, -s * c, c * c;
  pp.diagonal = is_diagonal_angle(phi);
  if (pp.diagonal) {
    // Remove rounding residue so diagonal projectors are exact.
    pp.p0 = pp.p0.array().round().matrix();
    pp.p1 = pp.p1.array().round().matrix();
  }
  return pp;
}

Matrix tensor_lift(const DensityMatrix& rho, int probes, Index max_dim) {
  if (probes < 1) throw SizingError("tensor_lift: need at least one probe");
  const Index n = rho.dim();
  if (probes > 30 || n * (Index{1} << probes) > max_dim) {
    throw SizingError("tensor_lift: lifted dimension exceeds configured maximum");
  }
  const Index words = Index{1} << probes;
  Matrix out = Matrix::Zero(n * words, n * words);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) out(i * words, j * words) = rho.matrix()(i, j);
  }
  return out;
}

Matrix partial_trace_probes(const Matrix& m, int probes) {
  if (probes < 0 || probes > 30) throw ShapeError("partial_trace_probes: bad probe count");
  const Index words = Index{1} << probes;
  if (m.rows() != m.cols() || m.rows() % words != 0 || m.rows() == 0) {
    throw ShapeError("partial_trace_probes: dimension is not a multiple of 2^K");
  }
  const Index n = m.rows() / words;
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      Complex acc = 0.0;
      for (Index w = 0; w < words; ++w) acc += m(i * words + w, j * words + w);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix evolution_operator(const Matrix& h, double t) {
  if (h.rows() != h.cols()) throw ShapeError("evolution_operator: Hamiltonian is not square");
  if (!is_hermitian(h, kOperatorHermitianTol)) {
    throw ValidationError("evolution_operator: Hamiltonian is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const auto& v = es.eigenvectors();
  Vector phases(h.rows());
  for (Index k = 0; k < h.rows(); ++k) phases(k) = std::exp(-kI * t * es.eigenvalues()(k));
  return v * phases.asDiagonal() * v.adjoint();
}

Matrix conjugate_by_evolution(const Matrix& m, const Matrix& h, double t) {
  if (m.rows() != h.rows() || m.cols() != h.cols()) {
    throw ShapeError("conjugate_by_evolution: dimension mismatch");
  }
  const Matrix u = evolution_operator(h, t);
  return u * m * u.adjoint();
}

Matrix small_time_lifted_state(const DensityMatrix& rho, const Matrix& a, const Matrix& c,
                               double t) {
  const Matrix& r = rho.matrix();
  const Index n = r.rows();
  if (a.rows() != n || c.rows() != n) throw ShapeError("small_time_lifted_state: dimension mismatch");
  const double st = std::sqrt(t);
  const Matrix cd = c.adjoint();
  Matrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = r - kI * t * commutator(a, r) - 0.5 * t * anticommutator(cd * c, r);
  out.topRightCorner(n, n) = st * r * cd;
  out.bottomLeftCorner(n, n) = st * c * r;
  out.bottomRightCorner(n, n) = t * c * r * cd;
  return out;
}

DensityMatrix clip_to_state(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw ShapeError("clip_to_state: matrix is not square");
  if (!m.allFinite()) throw DegenerateStateError("clip_to_state: non-finite entries");
  Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Eigen::VectorXd& w = es.eigenvalues();
  if (w.minCoeff() >= 0.0) {
    const double tr = h.trace().real();
    if (!(tr > 0.0)) throw DegenerateStateError("clip_to_state: zero trace");
    return DensityMatrix::trusted(h / tr);
  }
  const Eigen::VectorXd clipped = w.cwiseMax(0.0);
  const double tr = clipped.sum();
  if (!(tr > 0.0)) throw DegenerateStateError("clip_to_state: no positive spectrum left");
  const auto& v = es.eigenvectors();
  Matrix out = v * (clipped / tr).cast<Complex>().asDiagonal() * v.adjoint();
  out = 0.5 * (out + out.adjoint());
  return DensityMatrix::trusted(std::move(out));
}

Vector random_unit_vector(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(dim);
  for (Index k = 0; k < dim; ++k) v(k) = Complex(g(rng), g(rng));
  return v / v.norm();
}

Matrix random_matrix(Index dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  Matrix m(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) m(i, j) = scale * Complex(g(rng), g(rng));
  }
  return m;
}

Matrix random_hermitian(Index dim, std::mt19937_64& rng, double scale) {
  const Matrix m = random_matrix(dim, rng, scale);
  return 0.5 * (m + m.adjoint());
}

Matrix random_unitary(Index dim, std::mt19937_64& rng) {
  const Matrix z = random_matrix(dim, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix column phases so the distribution is Haar.
  for (Index k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

DensityMatrix random_mixed_state(Index dim, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w(dim);
  for (Index k = 0; k < dim; ++k) w(k) = e(rng);
  w /= w.sum();
  const Matrix u = random_unitary(dim, rng);
  Matrix m = u * w.cast<Complex>().asDiagonal() * u.adjoint();
  m = 0.5 * (m + m.adjoint());
  m /= m.trace().real();
  return DensityMatrix(std::move(m));
}

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix transition_0_to_1() {
  Matrix m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

}  // namespace qfilter
