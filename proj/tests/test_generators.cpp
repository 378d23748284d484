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

#include "qfilter/generators.hpp"
#include "qfilter/stats.hpp"

using namespace qfilter;

namespace {

Matrix lindblad_one(const Matrix& rho, const Matrix& a, const Matrix& c) {
  return -kI * commutator(a, rho) + c * rho * c.adjoint() - 0.5 * anticommutator(c.adjoint() * c, rho);
}

// Random Hermitian direction with zero trace.
Matrix traceless(Index n, std::mt19937_64& rng) {
  Matrix x = random_hermitian(n, rng);
  return x - x.trace() / static_cast<double>(n) * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("observable derivatives match finite differences") {
  std::mt19937_64 rng(1);
  const ObservablePolynomial f({random_hermitian(3, rng), random_hermitian(3, rng)},
                               {{1.0, {3, 0}}, {-0.7, {1, 2}}, {0.4, {1, 0}}, {0.2, {0, 0}}});
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix rho = random_mixed_state(3, rng).matrix();
    const Matrix x = traceless(3, rng);
    const double e = 1e-4;
    const double fd1 = (f.value(rho + e * x) - f.value(rho - e * x)) / (2.0 * e);
    const double g = f.gradient_pairing(rho, x);
    CHECK(std::abs(fd1 - g) <= 1e-6 * std::max(1.0, std::abs(g)));
    const double fd2 = (f.value(rho + e * x) - 2.0 * f.value(rho) + f.value(rho - e * x)) / (e * e);
    const double hf = f.hessian_form(rho, x);
    CHECK(std::abs(fd2 - hf) <= 1e-5 * std::max(1.0, std::abs(hf)));
  }
  CHECK_THROWS_AS(ObservablePolynomial({pauli_z()}, {{1.0, {4}}}), ValidationError);
}

TEST_CASE("generators kill constants") {
  std::mt19937_64 rng(2);
  const auto one = ObservablePolynomial::constant(1.0);
  const Matrix rho = random_mixed_state(2, rng).matrix();
  const Matrix a = random_hermitian(2, rng), c = random_matrix(2, rng);
  CHECK(eval_count(one, rho, a, c) == 0.0);
  CHECK(eval_dif(one, rho, a, c) == 0.0);
  HamiltonianSpec s;
  s.a = a;
  s.channels = {{c, 0.0}, {c, 0.3}};
  CHECK(eval_mix(one, rho, s) == 0.0);
}

TEST_CASE("hand evaluation of the counting generator") {
  const auto f = ObservablePolynomial::linear(pauli_z());
  const Matrix rho = DensityMatrix::basis(2, 0).matrix();
  CHECK(std::abs(eval_count(f, rho, Matrix::Zero(2, 2), transition_0_to_1()) - (-2.0)) < 1e-14);
}

TEST_CASE("linear observables reproduce the Lindblad pairing") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 3;
    const Matrix b = random_hermitian(n, rng);
    const Matrix rho = random_mixed_state(n, rng).matrix();
    const Matrix a = random_hermitian(n, rng), c = random_matrix(n, rng);
    const auto f = ObservablePolynomial::linear(b);
    const double ref = trace_real(b * lindblad_one(rho, a, c));
    const double tol = 1e-9 * std::max(1.0, std::abs(ref));
    CHECK(std::abs(eval_count(f, rho, a, c) - ref) <= tol);
    CHECK(std::abs(eval_dif(f, rho, a, c) - ref) <= tol);
    HamiltonianSpec s;
    s.a = a;
    s.channels = {{c, 0.0}};
    CHECK(std::abs(eval_mix(f, rho, s) - ref) <= tol);
  }
}

TEST_CASE("mixed generator reductions") {
  std::mt19937_64 rng(4);
  const Matrix rho = random_mixed_state(2, rng).matrix();
  const Matrix a = random_hermitian(2, rng), c1 = random_matrix(2, rng), c2 = random_matrix(2, rng);
  const ObservablePolynomial f({pauli_z(), pauli_x()}, {{1.0, {2, 0}}, {0.5, {1, 1}}});
  HamiltonianSpec dif;
  dif.a = a;
  dif.channels = {{c1, 0.7}};
  CHECK(std::abs(eval_mix(f, rho, dif) - eval_dif(f, rho, a, c1)) < 1e-12);
  HamiltonianSpec two;
  two.a = a;
  two.channels = {{c1, 0.0}, {c2, 0.0}};
  const double sum = eval_count(f, rho, a, c1) + eval_count(f, rho, Matrix::Zero(2, 2), c2);
  CHECK(std::abs(eval_mix(f, rho, two) - sum) < 1e-12);
  const Matrix b = random_hermitian(2, rng);
  const double lin = trace_real(b * (lindblad_one(rho, a, c1) + lindblad_one(rho, Matrix::Zero(2, 2), c2)));
  CHECK(std::abs(eval_mix(ObservablePolynomial::linear(b), rho, two) - lin) < 1e-12);
}

TEST_CASE("diffusive second-order term against a finite-difference Hessian") {
  std::mt19937_64 rng(5);
  const Matrix rho = random_mixed_state(2, rng).matrix();
  const Matrix c = random_matrix(2, rng);
  const Matrix zero = Matrix::Zero(2, 2);
  const auto sq = ObservablePolynomial::square(pauli_z());
  const auto lin = ObservablePolynomial::linear(pauli_z());
  const double omega = trace_real(rho * c.adjoint() + c * rho);
  const Matrix bdir = rho * c.adjoint() + c * rho - omega * rho;
  const double e = 1e-4;
  const double hess = (sq.value(rho + e * bdir) - 2.0 * sq.value(rho) + sq.value(rho - e * bdir)) / (e * e);
  const double first = sq.gradient_pairing(rho, c * rho * c.adjoint() - 0.5 * anticommutator(c.adjoint() * c, rho));
  CHECK(std::abs(eval_dif(sq, rho, zero, c) - (0.5 * hess + first)) < 1e-5);
  CHECK(std::abs(sq.hessian_form(rho, bdir) - 2.0 * std::pow(trace_real(pauli_z() * bdir), 2)) < 1e-12);
  (void)lin;
}

TEST_CASE("empirical generator residuals") {
  const auto probes = probe_states(2);
  REQUIRE(probes.size() == 20);
  // No interaction: only the unitary Taylor error, first order in h.
  HamiltonianSpec free;
  free.a = pauli_x();
  free.channels = {{Matrix::Zero(2, 2), 0.0}};
  const auto lin = ObservablePolynomial::linear(pauli_z());
  const double r1 = empirical_generator_residual(lin, free, 1e-3, probes);
  const double r2 = empirical_generator_residual(lin, free, 1e-4, probes);
  CHECK(r2 < r1);
  CHECK(std::abs(std::log10(r1 / r2) - 1.0) < 0.1);

  HamiltonianSpec s;
  s.a = 0.5 * pauli_x();
  s.channels = {{transition_0_to_1(), 0.0}};
  const ObservablePolynomial f({pauli_z(), pauli_x()}, {{1.0, {2, 0}}, {0.5, {1, 1}}, {1.0, {0, 1}}});
  std::vector<double> hs, res;
  for (double h : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    hs.push_back(h);
    res.push_back(empirical_generator_residual(f, s, h, probes));
  }
  CHECK(loglog_slope(hs, res) >= 0.45);
}

TEST_CASE("semigroup reference") {
  HamiltonianSpec s;
  s.a = 0.5 * pauli_x();
  s.channels = {{transition_0_to_1(), 0.0}};
  const auto probes = probe_states(2);
  const auto lin = ObservablePolynomial::linear(pauli_z());
  // s -> 0 returns f itself.
  const auto zero = semigroup_reference(lin, s, 1e-12, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(std::abs(zero.values[i] - lin.value(probes[i].matrix())) < 1e-9);
  // Renewal solver against the exact linear solution.
  const auto exact = semigroup_reference(lin, s, 0.5, probes);
  CHECK(exact.method == SemigroupMethod::kLinear);
  const auto renewal = renewal_semigroup(lin, s, 0.5, probes, 512);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(std::abs(renewal[i] - exact.values[i]) < 1e-6);
  CHECK(renewal_applicable(s));
  HamiltonianSpec d = s;
  d.channels[0].phi = 0.3;
  CHECK_FALSE(renewal_applicable(d));
}

TEST_CASE("lindblad solution agrees with the Liouvillian exponential") {
  std::mt19937_64 rng(6);
  HamiltonianSpec s;
  s.a = random_hermitian(3, rng);
  s.channels = {{random_matrix(3, rng, 0.5), 0.0}, {random_matrix(3, rng, 0.5), 1.0}};
  const Matrix rho = random_mixed_state(3, rng).matrix();
  const Matrix evolved = lindblad_evolve(rho, s, 0.4);
  CHECK(std::abs(evolved.trace().real() - 1.0) < 1e-12);
  // Small-step Taylor check of the right-hand side.
  const double e = 1e-6;
  const Matrix fd = (lindblad_evolve(rho, s, e) - rho) / e;
  CHECK((fd - lindblad_rhs(rho, s)).cwiseAbs().maxCoeff() < 1e-4);
  // Adjoint duality: tr(B L(rho)) = tr(L*(B) rho).
  const Matrix b = random_hermitian(3, rng);
  CHECK(std::abs(trace_real(b * lindblad_rhs(rho, s)) - trace_real(lindblad_adjoint_rhs(b, s) * rho)) < 1e-12);
}

TEST_CASE("residual table format") {
  HamiltonianSpec s;
  s.a = pauli_x();
  s.channels = {{transition_0_to_1(), 0.0}};
  const std::string hash = spec_hash(s);
  CHECK(hash.size() == 16);
  CHECK(spec_hash(s) == hash);
  const std::string csv = residual_table_csv({{0.5, 0.25}}, hash);
  CHECK(csv.rfind("h,residual,channel_config_hash\n", 0) == 0);
  CHECK(csv.find("0.5,0.25," + hash) != std::string::npos);
}
