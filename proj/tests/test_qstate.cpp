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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "qfilter/chain.hpp"
#include "qfilter/qstate.hpp"
#include "qfilter/stats.hpp"

using namespace qfilter;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Block (p, q) of a lifted matrix in the atom-major ordering i * 2 + p.
Matrix probe_block(const Matrix& m, Index n, int p, int q) {
  Matrix b(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) b(i, j) = m(i * 2 + p, j * 2 + q);
  }
  return b;
}

}  // namespace

TEST_CASE("density matrix validation") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.7;
  m(1, 1) = 0.3;
  CHECK_NOTHROW(DensityMatrix{m});
  Matrix bad_trace = m * 1.1;
  CHECK_THROWS_AS(DensityMatrix{bad_trace}, ValidationError);
  Matrix negative = m;
  negative(0, 0) = 1.2;
  negative(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix{negative}, ValidationError);
  Matrix skew = m;
  skew(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{skew}, ValidationError);
  Vector v(2);
  v << 1.0, 1.0;
  CHECK_THROWS_AS(PureState{v}, ValidationError);
  CHECK_NOTHROW(PureState{v / std::sqrt(2.0)});
}

TEST_CASE("tensor lift places the state in the vacuum block") {
  std::mt19937_64 rng(1);
  const DensityMatrix rho = random_mixed_state(2, rng);
  const Matrix one = tensor_lift(rho, 1);
  CHECK(one.rows() == 4);
  CHECK(max_abs(probe_block(one, 2, 0, 0) - rho.matrix()) == 0.0);
  CHECK(max_abs(probe_block(one, 2, 1, 1)) == 0.0);
  CHECK(max_abs(probe_block(one, 2, 0, 1)) == 0.0);

  const Matrix mixed = tensor_lift(DensityMatrix::maximally_mixed(3), 1);
  CHECK(std::abs(mixed.trace().real() - 1.0) < 1e-15);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(mixed(2 * i, 2 * i).real() - 1.0 / 3.0) < 1e-15);

  // Kronecker-product oracle for two probes.
  Matrix vac = Matrix::Zero(2, 2);
  vac(0, 0) = 1.0;
  const Matrix oracle = kron(kron(rho.matrix(), vac), vac);
  const Matrix two = tensor_lift(rho, 2);
  CHECK(two.rows() == 8);
  CHECK(max_abs(two - oracle) == 0.0);

  CHECK_THROWS_AS(tensor_lift(rho, 0), SizingError);
  CHECK_THROWS_AS(tensor_lift(rho, 12), SizingError);
}

TEST_CASE("partial trace over probes") {
  std::mt19937_64 rng(2);
  for (Index n : {2, 3}) {
    const DensityMatrix rho = random_mixed_state(n, rng);
    for (int k : {1, 2, 3}) CHECK(max_abs(partial_trace_probes(tensor_lift(rho, k), k) - rho.matrix()) < 1e-15);
  }
  // One probe: sum of the two diagonal probe blocks.
  const Matrix m = random_matrix(6, rng);
  const Matrix pt = partial_trace_probes(m, 1);
  CHECK(max_abs(pt - probe_block(m, 3, 0, 0) - probe_block(m, 3, 1, 1)) < 1e-15);
  // Brute-force index summation on a random Hermitian 4x4.
  const Matrix h = random_hermitian(4, rng);
  const Matrix ph = partial_trace_probes(h, 1);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      Complex acc = 0.0;
      for (Index k = 0; k < 2; ++k) acc += h(i * 2 + k, j * 2 + k);
      CHECK(std::abs(ph(i, j) - acc) < 1e-15);
    }
  }
  CHECK(std::abs(ph.trace() - h.trace()) < 1e-12);
  CHECK_THROWS_AS(partial_trace_probes(Matrix::Zero(5, 5), 1), ShapeError);
}

TEST_CASE("conjugation by the evolution") {
  std::mt19937_64 rng(3);
  const Matrix m = random_mixed_state(3, rng).matrix();
  CHECK(max_abs(conjugate_by_evolution(m, Matrix::Zero(3, 3), 0.7) - m) < 1e-15);
  // Commuting pair: functions of the same Hermitian operator.
  const Matrix h = random_hermitian(3, rng);
  const Matrix f = h * h + 0.5 * h;
  CHECK(max_abs(conjugate_by_evolution(f, h, 1.3) - f) < 1e-12);
  const Matrix c = conjugate_by_evolution(m, h, 2.1);
  CHECK(std::abs(c.trace() - m.trace()) < 1e-10);
  CHECK(hermiticity_defect(c) < 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> e1(m), e2(0.5 * (c + c.adjoint()));
  CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  Matrix nonherm = h;
  nonherm(0, 1) += 0.5;
  CHECK_THROWS_AS(conjugate_by_evolution(m, nonherm, 1.0), ValidationError);
}

TEST_CASE("small-time lifted state") {
  const DensityMatrix ground = DensityMatrix::basis(2, 0);
  const Matrix c = transition_0_to_1();
  const Matrix zero = Matrix::Zero(2, 2);
  const double t = 1e-3;
  // Decoupled probe.
  std::mt19937_64 rng(4);
  const DensityMatrix rho = random_mixed_state(2, rng);
  const Matrix a = random_hermitian(2, rng);
  const Matrix d = small_time_lifted_state(rho, a, zero, t);
  CHECK(max_abs(d.topLeftCorner(2, 2) - (rho.matrix() - kI * t * commutator(a, rho.matrix()))) < 1e-15);
  CHECK(max_abs(d.bottomRightCorner(2, 2)) == 0.0);
  // Hand oracle: C|0><0|C* = |1><1|.
  const Matrix s = small_time_lifted_state(ground, zero, c, t);
  Matrix expected = Matrix::Zero(2, 2);
  expected(1, 1) = t;
  CHECK(max_abs(s.bottomRightCorner(2, 2) - expected) < 1e-18);

  // Error against the exact conjugation scales as t^(3/2).
  HamiltonianSpec spec;
  spec.a = a;
  spec.channels = {{random_matrix(2, rng), 0.0}};
  std::vector<double> ts, errs;
  for (double tt : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const Matrix exact = conjugate_by_evolution(tensor_lift(rho, 1), lifted_hamiltonian(spec, tt), tt);
    const Matrix approx = small_time_lifted_state(rho, spec.a, spec.channels[0].c, tt);
    double err = 0.0;
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        err = std::max(err, max_abs(probe_block(exact, 2, p, q) - approx.block(2 * p, 2 * q, 2, 2)));
      }
    }
    ts.push_back(tt);
    errs.push_back(err);
  }
  CHECK(loglog_slope(ts, errs) >= 1.4);
}

TEST_CASE("projector pairs") {
  const ProjectorPair d = projector_pair(0.0);
  CHECK(d.diagonal);
  CHECK(d.p0(0, 0) == 1.0);
  CHECK(d.p0(1, 1) == 0.0);
  CHECK(d.p1(1, 1) == 1.0);
  CHECK(d.p0(0, 1) == 0.0);
  const ProjectorPair q = projector_pair(M_PI / 4.0);
  CHECK_FALSE(q.diagonal);
  CHECK(std::abs(q.p0.cwiseAbs().maxCoeff() - 0.5) < 1e-15);
  CHECK(std::abs(q.p0.cwiseAbs().minCoeff() - 0.5) < 1e-15);
  CHECK(std::abs(q.p1.cwiseAbs().minCoeff() - 0.5) < 1e-15);
  CHECK(projector_pair(M_PI / 2.0).diagonal);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  for (int k = 0; k < 100; ++k) {
    const ProjectorPair p = projector_pair(angle(rng));
    CHECK((p.p0 * p.p0 - p.p0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.p1 * p.p1 - p.p1).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.p0 * p.p1).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.p0 + p.p1 - id).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("clip to state repairs small defects") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0 + 1e-9;
  m(1, 1) = -1e-9;
  const DensityMatrix r = clip_to_state(m);
  CHECK(min_eigenvalue(r.matrix()) >= 0.0);
  CHECK(std::abs(r.matrix().trace().real() - 1.0) < 1e-14);
}
