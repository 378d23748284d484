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

// Serial reference path against the OpenMP kernels on the two ensemble
// workloads that dominate the experiments.

#include <benchmark/benchmark.h>

#include "qfilter/ctrw.hpp"
#include "qfilter/sde.hpp"

namespace {

using qfilter::Execution;

qfilter::HamiltonianSpec model() {
  qfilter::HamiltonianSpec s;
  s.a = qfilter::pauli_x();
  s.channels = {{qfilter::transition_0_to_1(), M_PI / 4.0}};
  return s;
}

void sde_ensemble(benchmark::State& state, Execution exec) {
  qfilter::SdeConfig cfg;
  cfg.spec = model();
  cfg.dt = 1e-3;
  const qfilter::SdeIntegrator integ(cfg);
  const auto rho0 = qfilter::DensityMatrix::basis(2, 0);
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto r = qfilter::ensemble_mean(integ, rho0, {qfilter::pauli_z()}, {0.5}, paths, 1, exec);
    benchmark::DoNotOptimize(r.points.front().mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void ctrw_chain(benchmark::State& state, Execution exec) {
  const auto f = qfilter::ObservablePolynomial::linear(qfilter::pauli_z());
  const auto rho0 = qfilter::DensityMatrix::basis(2, 0);
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto x = qfilter::ctrw_chain_samples(f, rho0, model(), 0.01, 0.7, 1.0, paths, 1, exec);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(sde_ensemble, serial, Execution::kSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sde_ensemble, openmp, Execution::kOpenMP)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ctrw_chain, serial, Execution::kSerial)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ctrw_chain, openmp, Execution::kOpenMP)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
