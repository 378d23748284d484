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
#include "qfilter/sde.hpp"
#include "qfilter/stats.hpp"

using namespace qfilter;

namespace {

HamiltonianSpec qubit(double phi) {
  HamiltonianSpec s;
  s.a = pauli_x();
  s.channels = {{transition_0_to_1(), phi}};
  return s;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("configuration") {
  SdeConfig cfg;
  cfg.spec = qubit(0.0);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_scheme("euler-maruyama") == SdeScheme::kEulerMaruyama);
  CHECK(parse_scheme(to_string(SdeScheme::kDriftRk4DiffusionEuler)) == SdeScheme::kDriftRk4DiffusionEuler);
  CHECK_THROWS_AS(parse_scheme("rk45"), ConfigError);
}

TEST_CASE("counting step") {
  const Matrix zero = Matrix::Zero(2, 2);
  std::mt19937_64 rng(1);
  const DensityMatrix rho = random_mixed_state(2, rng);
  const Matrix a = random_hermitian(2, rng);
  const double dt = 1e-3;
  // No coupling: Euler step of the unitary flow.
  const Matrix raw = step_counting_raw(rho.matrix(), a, zero, dt, 0.5);
  CHECK(max_abs(raw - (rho.matrix() - kI * dt * commutator(a, rho.matrix()))) < 1e-15);
  // A jump from the ground state lands on |1><1|.
  const Matrix jumped = step_counting_raw(DensityMatrix::basis(2, 0).matrix(), zero, transition_0_to_1(), dt, 0.0);
  CHECK(max_abs(jumped - DensityMatrix::basis(2, 1).matrix()) < 1e-15);
  CHECK_THROWS_AS(step_counting_raw(DensityMatrix::basis(2, 0).matrix(), zero, 40.0 * transition_0_to_1(), dt, 0.5),
                  StepSizeError);
}

TEST_CASE("diffusive increments are traceless") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix rho = random_mixed_state(3, rng).matrix();
    const Matrix a = random_hermitian(3, rng), c = random_matrix(3, rng);
    CHECK(std::abs(diffusive_drift(rho, a, c).trace()) < 1e-12);
    CHECK(std::abs(diffusion_coefficient(rho, c).trace()) < 1e-12);
    CHECK(std::abs(counting_drift(rho, a, c).trace()) < 1e-12);
    const Matrix step = step_diffusive_raw(rho, a, c, 1e-3, 0.03);
    CHECK(std::abs(step.trace() - 1.0) < 1e-12);
  }
  const Matrix a = pauli_x();
  const Matrix rho = DensityMatrix::basis(2, 0).matrix();
  const Matrix free = step_diffusive_raw(rho, a, Matrix::Zero(2, 2), 1e-3, 0.0);
  CHECK(max_abs(free - (rho - kI * 1e-3 * commutator(a, rho))) < 1e-15);
}

TEST_CASE("projection") {
  std::mt19937_64 rng(3);
  const DensityMatrix rho = random_mixed_state(2, rng);
  CHECK(max_abs(project_to_state(rho.matrix()).matrix() - rho.matrix()) == 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.05;
  d(1, 1) = -0.05;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  CHECK(max_abs(project_to_state(d).matrix() - expected) < 1e-15);
  const Matrix pure = DensityMatrix::basis(2, 0).matrix();
  for (double eps : {1e-3, 1e-6}) {
    const Matrix pert = pure + eps * random_hermitian(2, rng);
    CHECK(trace_distance(project_to_state(pert).matrix(), pure) <= 2.0 * eps * pert.norm() / eps);
  }
  CHECK_THROWS_AS(project_to_state(-pure), DegenerateStateError);
}

TEST_CASE("pure-state equation tracks the density-matrix equation") {
  const Matrix a = pauli_x();
  const Matrix c = transition_0_to_1();
  std::vector<double> dts, dist;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    Vector v(2);
    v << 1.0, 0.0;
    PureState psi(v);
    Matrix rho = psi.density().matrix();
    double worst = 0.0;
    for (long k = 0; k < std::lround(1.0 / dt); ++k) {
      const double dw = normal(rng);
      psi = step_pure(psi, a, c, dt, dw);
      rho = step_diffusive_raw(rho, a, c, dt, dw);
      worst = std::max(worst, trace_distance(psi.density().matrix(), rho / rho.trace().real()));
    }
    dts.push_back(dt);
    dist.push_back(worst);
  }
  CHECK(dist[2] < dist[1]);
  CHECK(dist[1] < dist[0]);
  CHECK(loglog_slope(dts, dist) >= 0.5);
}

TEST_CASE("linear equation") {
  const Matrix a = pauli_x();
  const Matrix rho = DensityMatrix::basis(2, 0).matrix();
  const LinearStep s = step_linear(rho, a, Matrix::Zero(2, 2), 1e-3, 0.0);
  CHECK(std::abs(s.xi.trace().real() - 1.0) < 1e-15);
  CHECK_THROWS_AS(step_linear(Matrix::Zero(2, 2), a, a, 1e-3, 0.0), IntegrationFailure);
  // Martingale normalization: E tr xi_t = 1 when Y is a Wiener process.
  const Matrix c = transition_0_to_1();
  const double dt = 1e-3;
  std::vector<double> traces;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    Matrix xi = rho;
    for (int k = 0; k < 500; ++k) xi = step_linear(xi, a, c, dt, normal(rng)).xi;
    traces.push_back(xi.trace().real());
  }
  const MeanSe m = mean_se(traces);
  CHECK(std::abs(m.mean - 1.0) < 3.0 * m.std_error + 1e-3);
}

TEST_CASE("ensemble means follow the master equation") {
  for (double phi : {0.0, M_PI / 4.0}) {
    SdeConfig cfg;
    cfg.spec = qubit(phi);
    cfg.dt = 1e-3;
    const SdeIntegrator integ(cfg);
    const DensityMatrix rho0 = DensityMatrix::basis(2, 0);
    const std::vector<double> checkpoints = {0.25, 0.5};
    const auto res = ensemble_mean(integ, rho0, {pauli_z()}, checkpoints, 2000, 77);
    CHECK(res.failed_paths == 0);
    for (const auto& p : res.points) {
      const double ref = trace_real(pauli_z() * lindblad_evolve(rho0.matrix(), cfg.spec, p.t));
      CHECK(std::abs(p.mean - ref) <= 3.0 * p.std_error);
    }
    CHECK(res.to_csv().rfind("t,observable,mean,stderr,n_paths\n", 0) == 0);
  }
}

TEST_CASE("two identical diffusive channels double the rate") {
  SdeConfig cfg;
  cfg.spec = qubit(M_PI / 4.0);
  cfg.spec.channels.push_back(cfg.spec.channels.front());
  cfg.dt = 1e-3;
  const SdeIntegrator integ(cfg);
  HamiltonianSpec doubled = qubit(0.0);
  doubled.channels[0].c *= std::sqrt(2.0);
  const DensityMatrix rho0 = DensityMatrix::basis(2, 0);
  const auto res = ensemble_mean(integ, rho0, {pauli_z(), pauli_x()}, {0.5}, 2000, 99);
  for (const auto& p : res.points) {
    const Matrix b = p.observable == 0 ? pauli_z() : pauli_x();
    CHECK(std::abs(p.mean - trace_real(b * lindblad_evolve(rho0.matrix(), doubled, p.t))) <= 3.0 * p.std_error);
  }
}

TEST_CASE("no channels: unitary flow") {
  HamiltonianSpec s;
  s.a = pauli_x();
  NoiseIncrement none;
  const Matrix rho = DensityMatrix::basis(2, 0).matrix();
  const Matrix out = step_mixed_raw(rho, s, 1e-3, none, SdeScheme::kEulerMaruyama);
  CHECK(max_abs(out - (rho - kI * 1e-3 * commutator(s.a, rho))) < 1e-15);
}

TEST_CASE("drift flow keeps positivity") {
  HamiltonianSpec s = qubit(0.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const Vector v = random_unit_vector(2, rng);
    const Matrix start = (1.0 - 1e-6) * v * v.adjoint() + 0.5e-6 * Matrix::Identity(2, 2);
    CHECK(drift_flow_min_eigenvalue(start, s, 1e-3, 1.0) >= -1e-6);
  }
}

TEST_CASE("integrator checkpoints and determinism") {
  SdeConfig cfg;
  cfg.spec = qubit(M_PI / 4.0);
  cfg.dt = 1e-2;
  const SdeIntegrator integ(cfg);
  std::mt19937_64 r1(3), r2(3);
  const auto a = integ.evolve_to(DensityMatrix::basis(2, 0).matrix(), {0.0, 0.125, 0.5}, r1);
  const auto b = integ.evolve_to(DensityMatrix::basis(2, 0).matrix(), {0.0, 0.125, 0.5}, r2);
  REQUIRE(a.size() == 3);
  CHECK(max_abs(a[0] - DensityMatrix::basis(2, 0).matrix()) == 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(max_abs(a[k] - b[k]) == 0.0);
}
