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

#include "json.hpp"
#include "qfilter/control.hpp"

using namespace qfilter;

namespace {

HamiltonianSpec decay_spec() {
  HamiltonianSpec s;
  s.a = pauli_x();
  s.channels = {{transition_0_to_1(), 0.0}};
  return s;
}

ControlProblem base_problem() {
  ControlProblem p;
  p.h0 = pauli_x();
  p.h1 = pauli_z();
  p.h2 = pauli_y();
  p.running_cost = 0.5 * pauli_z();
  p.terminal_cost = pauli_z();
  p.horizon = 0.5;
  return p;
}

double affine(const Eigen::Vector3d& r) { return 0.3 - 1.2 * r.x() + 0.7 * r.y() + 2.0 * r.z(); }

}  // namespace

TEST_CASE("problem validation") {
  ControlProblem p = base_problem();
  CHECK_NOTHROW(p.validate());
  p.u_grid.clear();
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = base_problem();
  p.h1 = Matrix::Zero(3, 3);
  CHECK_THROWS(p.validate());
  p = base_problem();
  CHECK((p.hamiltonian(1.0, -0.5) - (pauli_x() + pauli_z() - 0.5 * pauli_y())).norm() < 1e-15);
}

TEST_CASE("Bloch coordinates") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Matrix rho = random_mixed_state(2, rng).matrix();
    CHECK((state_from_bloch(bloch_vector(rho)) - rho).norm() < 1e-14);
  }
  CHECK((bloch_vector(DensityMatrix::basis(2, 0).matrix()) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("lattice mesh reproduces affine functions") {
  const BlochGridMesh mesh(5);
  CHECK(mesh.size() == 125);
  CHECK(mesh.spacing() == doctest::Approx(0.5));
  std::vector<double> values(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    CHECK(std::abs(mesh.node(k).trace().real() - 1.0) < 1e-15);
    values[k] = affine(bloch_vector(mesh.node(k)));
  }
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const Matrix rho = random_mixed_state(2, rng).matrix();
    bool outside = true;
    CHECK(mesh.interpolate(values, rho, &outside) == doctest::Approx(affine(bloch_vector(rho))).epsilon(1e-12));
    CHECK_FALSE(outside);
  }
  // Outside the cube the boundary cell is extended linearly.
  const Matrix far = state_from_bloch(Eigen::Vector3d(1.5, -0.2, 0.1));
  bool outside = false;
  CHECK(mesh.interpolate(values, far, &outside) == doctest::Approx(affine(Eigen::Vector3d(1.5, -0.2, 0.1))));
  CHECK(outside);
  CHECK_THROWS(BlochGridMesh(1));
  // Corner (-1, -1, -1) lies outside the ball; the centre is the mixed state.
  CHECK_FALSE(is_state_node(mesh, 0));
  CHECK(is_state_node(mesh, (2 * 5 + 2) * 5 + 2));
}

TEST_CASE("sample mesh nearest node") {
  const SampleMesh mesh(3, 40, 5);
  CHECK(mesh.dim() == 3);
  std::vector<double> values(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) values[k] = static_cast<double>(k);
  for (std::size_t k = 0; k < mesh.size(); ++k) CHECK(mesh.interpolate(values, mesh.node(k)) == static_cast<double>(k));
}

TEST_CASE("Markov event weights") {
  ControlProblem p = base_problem();
  const EventWeights w = event_weights(p, 0.05);
  REQUIRE(w.occupation.size() == 11);
  for (std::size_t n = 0; n < 10; ++n) CHECK(w.occupation[n] == doctest::Approx(0.05));
  CHECK(w.occupation[10] == 0.0);
  CHECK(w.terminal[10] == 1.0);
}

TEST_CASE("fractional event weights") {
  ControlProblem p = base_problem();
  p.markov = false;
  p.beta = 0.8;
  const EventWeights w = event_weights(p, 0.05, 20000, 3);
  double occ = 0.0, term = 0.0;
  for (double x : w.occupation) occ += x;
  for (double x : w.terminal) term += x;
  CHECK(occ == doctest::Approx(p.horizon).epsilon(1e-12));
  CHECK(term == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trace-preserving terminal cost gives a constant value") {
  ControlProblem p = base_problem();
  p.running_cost = Matrix::Zero(2, 2);
  p.terminal_cost = Matrix::Identity(2, 2);
  p.u_grid = {-1.0, 0.0, 1.0};
  const BlochGridMesh mesh(5);
  const ValueTable t = dp_solve(p, decay_spec(), 0.1, mesh, Execution::kSerial);
  for (const auto& layer : t.values)
    for (double v : layer) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  p.running_cost = Matrix::Identity(2, 2);
  p.terminal_cost = Matrix::Zero(2, 2);
  const ValueTable r = dp_solve(p, decay_spec(), 0.1, mesh, Execution::kSerial);
  for (double v : r.values[0]) CHECK(v == doctest::Approx(p.horizon).epsilon(1e-12));
}

TEST_CASE("passive game equals the averaged chain") {
  // With one control each the recursion is linear, so the value is
  // sum_n h tr(J Lambda^n rho) + tr(F Lambda^N rho) for the average map.
  ControlProblem p = base_problem();
  p.u_grid = {0.0};
  p.v_grid = {0.0};
  const double h = 0.1;
  const BlochGridMesh mesh(7);
  const ValueTable t = dp_solve(p, decay_spec(), h, mesh, Execution::kSerial);
  const ChainKernel kernel(decay_spec(), h);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix rho = random_mixed_state(2, rng).matrix();
    const double dp = mesh.interpolate(t.values[0], rho);
    double expected = 0.0;
    for (int n = 0; n < 5; ++n) {
      expected += h * trace_real(p.running_cost * rho);
      rho = kernel.average(rho);
    }
    expected += trace_real(p.terminal_cost * rho);
    CHECK(dp == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(t.isaacs_gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("value is monotone in the control sets") {
  ControlProblem p = base_problem();
  p.u_grid = {-1.0, 0.0, 1.0};
  p.v_grid = {-0.5, 0.0, 0.5};
  ControlProblem fewer_u = p;
  fewer_u.u_grid = {0.0, 1.0};
  ControlProblem fewer_v = p;
  fewer_v.v_grid = {0.0};
  const BlochGridMesh mesh(7);
  const ValueTable full = dp_solve(p, decay_spec(), 0.1, mesh, Execution::kSerial);
  const ValueTable a = dp_solve(fewer_u, decay_spec(), 0.1, mesh, Execution::kSerial);
  const ValueTable b = dp_solve(fewer_v, decay_spec(), 0.1, mesh, Execution::kSerial);
  for (std::size_t n = 0; n < full.layers(); ++n)
    for (std::size_t k = 0; k < mesh.size(); ++k) {
      if (!is_state_node(mesh, k)) continue;
      CHECK(full.values[n][k] >= a.values[n][k] - 1e-12);
      CHECK(full.values[n][k] <= b.values[n][k] + 1e-12);
    }
  CHECK(full.isaacs_gap <= 1e-12);
  const auto j = nlohmann::json::parse(full.to_json());
  CHECK(j.at("values").size() == full.layers());
  CHECK(j.at("h").get<double>() == 0.1);
}

TEST_CASE("ties go to the lowest index") {
  ControlProblem p = base_problem();
  p.h1 = Matrix::Zero(2, 2);
  p.u_grid = {-1.0, 0.0, 1.0};
  const BlochGridMesh mesh(5);
  const ValueTable t = dp_solve(p, decay_spec(), 0.1, mesh, Execution::kSerial);
  for (std::size_t n = 0; n + 1 < t.layers(); ++n)
    for (int u : t.u_index[n]) CHECK(u == 0);
  for (int u : t.u_index.back()) CHECK(u == -1);
}

TEST_CASE("Monte Carlo matches the recursion") {
  ControlProblem p = base_problem();
  p.u_grid = {0.0};
  p.v_grid = {0.0};
  const double h = 0.1;
  const BlochGridMesh mesh(7);
  const ValueTable t = dp_solve(p, decay_spec(), h, mesh, Execution::kSerial);
  const DensityMatrix rho0 = DensityMatrix::basis(2, 0);
  const MeanSe mc = evaluate_policy_mc(p, decay_spec(), h, rho0, constant_policy(0, 0), 4000, 21);
  CHECK(std::abs(mc.mean - mesh.interpolate(t.values[0], rho0.matrix())) <= 3.0 * mc.std_error);
  const MeanSe serial =
      evaluate_policy_mc(p, decay_spec(), h, rho0, constant_policy(0, 0), 200, 21, Execution::kSerial);
  const MeanSe parallel =
      evaluate_policy_mc(p, decay_spec(), h, rho0, constant_policy(0, 0), 200, 21, Execution::kOpenMP);
  CHECK(serial.mean == parallel.mean);

  auto table = std::make_shared<const ValueTable>(t);
  const Policy pol = dp_policy(p, decay_spec(), h, mesh, table);
  CHECK(pol(0, rho0.matrix()) == std::make_pair(0, 0));
}

TEST_CASE("zero costs give a zero residual") {
  ControlProblem p = base_problem();
  p.running_cost = Matrix::Zero(2, 2);
  p.terminal_cost = Matrix::Zero(2, 2);
  p.horizon = 0.4;
  const BlochGridMesh mesh(5);
  const std::vector<DensityMatrix> probes = {DensityMatrix::basis(2, 0), DensityMatrix::maximally_mixed(2)};
  const ValueSeries s = value_series(p, decay_spec(), 0.1, mesh, 0.1, 4, probes, Execution::kSerial);
  const HjbReport r = hjb_residual(p, decay_spec(), mesh, s, 1.0);
  CHECK(r.max_residual == 0.0);
  CHECK(r.to_csv().rfind("tau,state,lhs,rhs,residual\n", 0) == 0);
}
