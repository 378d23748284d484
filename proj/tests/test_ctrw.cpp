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

#include "qfilter/ctrw.hpp"
#include "qfilter/generators.hpp"

using namespace qfilter;

namespace {

// Mittag-Leffler function E_beta(x) by its power series; adequate for |x| <= 2.
double mittag_leffler(double beta, double x) {
  double acc = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double term = std::pow(x, k) / std::tgamma(beta * k + 1.0);
    acc += term;
    if (k > 5 && std::abs(term) < 1e-17) break;
  }
  return acc;
}

TimeSeries sample(double dt, std::size_t points, double (*f)(double)) {
  TimeSeries s = TimeSeries::uniform(dt, points);
  for (std::size_t k = 0; k < points; ++k) s.values[k] = f(s.times[k]);
  return s;
}

ObservablePolynomial z_observable() { return ObservablePolynomial::linear(pauli_z()); }

HamiltonianSpec decay_model() {
  HamiltonianSpec s;
  s.a = Matrix::Zero(2, 2);
  s.channels = {{transition_0_to_1(), 0.0}};
  return s;
}

}  // namespace

TEST_CASE("stable sampler Laplace transform") {
  for (double beta : {0.5, 0.7, 0.9}) {
    std::mt19937_64 rng(17);
    for (double lambda : {0.5, 1.0, 2.0}) {
      std::vector<double> x;
      for (int k = 0; k < 40000; ++k) x.push_back(std::exp(-lambda * sample_stable(beta, rng)));
      const MeanSe m = mean_se(x);
      CHECK(std::abs(m.mean - std::exp(-std::pow(lambda, beta))) <= 3.5 * m.std_error);
    }
  }
}

TEST_CASE("inverse stable moments") {
  for (double beta : {0.5, 0.8}) {
    std::mt19937_64 rng(23);
    const double t = 2.0;
    std::vector<double> x;
    for (int k = 0; k < 40000; ++k) x.push_back(sample_inverse_stable(beta, t, rng));
    const MeanSe m = mean_se(x);
    CHECK(std::abs(m.mean - std::pow(t, beta) / std::tgamma(1.0 + beta)) <= 3.5 * m.std_error);
  }
}

TEST_CASE("subordinator paths") {
  std::mt19937_64 rng(4);
  const std::vector<double> grid = {0.0, 0.1, 0.3, 0.6, 1.0};
  const SubordinatorPath p = simulate_subordinator(0.6, grid, rng);
  REQUIRE(p.values.size() == grid.size());
  CHECK(p.values[0] == 0.0);
  for (std::size_t k = 1; k < p.values.size(); ++k) CHECK(p.values[k] >= p.values[k - 1]);
  const SubordinatorPath q = simulate_subordinator_until(0.6, 1e-3, 2.0, rng);
  CHECK(q.values.back() > 2.0);

  SubordinatorPath hand;
  hand.grid = {0.0, 1.0, 2.0, 3.0};
  hand.values = {0.0, 0.5, 0.5, 4.0};
  CHECK(inverse_subordinator(hand, 0.25) == 0.0);
  CHECK(inverse_subordinator(hand, 0.5) == 2.0);
  CHECK(inverse_subordinator(hand, 3.9) == 2.0);
  CHECK_THROWS_AS(inverse_subordinator(hand, 4.0), RangeError);
}

TEST_CASE("waiting laws") {
  CHECK(ctrw_scale(0.5, 0.01) == doctest::Approx(0.01 * 0.5 / std::sqrt(M_PI)).epsilon(1e-14));
  std::mt19937_64 rng(8);
  CHECK(ctrw_event_count(WaitingLaw::degenerate(0.3), 1.0, rng) == 3);
  CHECK_THROWS_AS(WaitingLaw::stable_tail(1.2, 1.0).validate(), ValidationError);
  CHECK_THROWS_AS(WaitingLaw::mixture({{0.5, 0.5}}, 1.0).validate(), ValidationError);

  // One-sample Kolmogorov distance against the closed-form survival.
  const double beta = 0.7;
  std::vector<double> draws;
  for (int k = 0; k < 20000; ++k) draws.push_back(sample_waiting(WaitingLaw::stable_tail(beta, 1.0), rng));
  std::sort(draws.begin(), draws.end());
  double dmax = 0.0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const double cdf = 1.0 - std::pow(1.0 + std::pow(beta, 1.0 / beta) * draws[k], -beta);
    dmax = std::max({dmax, std::abs(cdf - k / n), std::abs(cdf - (k + 1) / n)});
  }
  CHECK(dmax * std::sqrt(n) < 1.63);
  CHECK(stable_tail_survival(beta, 2.0) == doctest::Approx(std::pow(1.0 + std::pow(beta, 1.0 / beta) * 2.0, -beta)));
}

TEST_CASE("event counts scale to the inverse subordinator") {
  const double beta = 0.7, h = 1e-3, t = 1.0;
  std::mt19937_64 rng(12);
  const WaitingLaw law = WaitingLaw::stable_tail(beta, ctrw_scale(beta, h));
  std::vector<double> x;
  for (int k = 0; k < 4000; ++k) x.push_back(h * static_cast<double>(ctrw_event_count(law, t, rng)));
  const MeanSe m = mean_se(x);
  const double expected = std::pow(t, beta) / std::tgamma(1.0 + beta);
  CHECK(std::abs(m.mean - expected) <= 3.0 * m.std_error + 0.05 * expected);
}

TEST_CASE("Caputo derivative") {
  const double beta = 0.5;
  const TimeSeries ones = sample(1e-2, 101, [](double) { return 1.0; });
  for (double v : caputo_derivative(ones, beta).values) CHECK(v == 0.0);

  // L1 is exact on linear data.
  const TimeSeries lin = sample(1e-2, 101, [](double t) { return t; });
  const TimeSeries dl = caputo_derivative(lin, beta);
  for (std::size_t k = 0; k < dl.values.size(); ++k) {
    const double t = dl.times[k];
    CHECK(dl.values[k] == doctest::Approx(std::pow(t, 1.0 - beta) / std::tgamma(2.0 - beta)).epsilon(1e-12));
  }

  // Quadratic data: error shrinks with the step.
  std::vector<double> steps, errors;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const auto n = static_cast<std::size_t>(std::lround(1.0 / dt)) + 1;
    const TimeSeries d = caputo_derivative(sample(dt, n, [](double t) { return t * t; }), beta);
    const double exact = 2.0 / std::tgamma(3.0 - beta);
    steps.push_back(dt);
    errors.push_back(std::abs(d.values.back() - exact));
  }
  CHECK(loglog_slope(steps, errors) >= 1.3);

  // Order one is the backward difference.
  const TimeSeries sq = sample(0.1, 11, [](double t) { return t * t; });
  const TimeSeries d1 = caputo_derivative(sq, 1.0);
  for (std::size_t k = 0; k < d1.values.size(); ++k)
    CHECK(d1.values[k] == doctest::Approx((sq.values[k + 1] - sq.values[k]) / 0.1).epsilon(1e-12));

  TimeSeries bad = lin;
  bad.times[3] += 1e-3;
  CHECK_THROWS_AS(caputo_derivative(bad, beta), FormatError);
}

TEST_CASE("mixed operator against the Caputo derivative") {
  const TimeSeries s = sample(1e-2, 101, [](double t) { return std::sin(3.0 * t) + t * t; });
  const TimeSeries m1 = mixed_caputo(s, WaitingLaw::mixture({{1.0, 0.6}}, 1.0));
  const TimeSeries c1 = caputo_derivative(s, 0.6);
  const double k1 = -std::tgamma(1.0 - 0.6) / 0.6;
  for (std::size_t k = 0; k < c1.values.size(); ++k)
    CHECK(m1.values[k] == doctest::Approx(k1 * c1.values[k]).epsilon(1e-9));

  const TimeSeries m2 = mixed_caputo(s, WaitingLaw::mixture({{0.3, 0.4}, {0.7, 0.8}}, 1.0));
  const TimeSeries ca = caputo_derivative(s, 0.4), cb = caputo_derivative(s, 0.8);
  for (std::size_t k = 0; k < ca.values.size(); ++k) {
    const double expected = 0.3 * -std::tgamma(0.6) / 0.4 * ca.values[k] + 0.7 * -std::tgamma(0.2) / 0.8 * cb.values[k];
    CHECK(m2.values[k] == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(mixture_tail(WaitingLaw::mixture({{0.3, 0.4}, {0.7, 0.8}}, 1.0), 2.0) ==
        doctest::Approx(0.3 * std::pow(2.0, -0.4) / 0.4 + 0.7 * std::pow(2.0, -0.8) / 0.8));
}

TEST_CASE("fractional equation report") {
  const TimeSeries g = sample(1e-2, 51, [](double t) { return std::cos(t); });
  TimeSeries lg = caputo_derivative(g, 0.7);
  lg.times.insert(lg.times.begin(), 0.0);
  lg.values.insert(lg.values.begin(), 0.0);
  const FractionalReport r = verify_fractional_equation(g, lg, 0.7);
  CHECK(r.max_residual < 1e-14);
  CHECK(r.to_csv().rfind("t,caputo,generator,residual\n", 0) == 0);
}

TEST_CASE("subordinated decay follows the Mittag-Leffler law") {
  // Mean of z under pure decay is 2 exp(-s) - 1; on the random clock it is
  // 2 E_beta(-t^beta) - 1.
  SdeConfig cfg;
  cfg.spec = decay_model();
  cfg.dt = 1e-3;
  const SdeIntegrator integ(cfg);
  const double beta = 0.7, t = 0.5;
  const auto x = subordinated_final_samples(z_observable(), DensityMatrix::basis(2, 0), integ, beta, t, 4000, 31);
  const MeanSe m = mean_se(x);
  const double expected = 2.0 * mittag_leffler(beta, -std::pow(t, beta)) - 1.0;
  CHECK(std::abs(m.mean - expected) <= 3.0 * m.std_error + 2e-3);

  const auto y = ctrw_chain_samples(z_observable(), DensityMatrix::basis(2, 0), decay_model(), 1e-3, beta, t, 4000, 31);
  const MeanSe c = mean_se(y);
  CHECK(std::abs(c.mean - expected) <= 3.0 * c.std_error + 0.02);
}

TEST_CASE("unit order leaves the clock unchanged") {
  SdeConfig cfg;
  cfg.spec = decay_model();
  cfg.dt = 1e-3;
  const SdeIntegrator integ(cfg);
  const TimeSeries grid = TimeSeries::uniform(0.1, 6);
  const TimeSeries g = subordinated_expectation(z_observable(), DensityMatrix::basis(2, 0), integ, 1.0, grid, 2000, 5);
  const SubordinatedSamples s = subordinated_samples(z_observable(), DensityMatrix::basis(2, 0), integ, 1.0, grid, 2000, 5);
  const auto se = s.std_error_f();
  for (std::size_t k = 0; k < grid.times.size(); ++k) {
    CHECK(g.values[k] == doctest::Approx(s.mean_f().values[k]).epsilon(1e-12));
    CHECK(std::abs(g.values[k] - (2.0 * std::exp(-grid.times[k]) - 1.0)) <= 3.0 * se[k] + 1e-3);
  }
}

TEST_CASE("serial and OpenMP ensembles agree") {
  const auto a = ctrw_chain_samples(z_observable(), DensityMatrix::basis(2, 0), decay_model(), 0.01, 0.7, 1.0, 64, 9,
                                    Execution::kSerial);
  const auto b = ctrw_chain_samples(z_observable(), DensityMatrix::basis(2, 0), decay_model(), 0.01, 0.7, 1.0, 64, 9,
                                    Execution::kOpenMP);
  CHECK(a == b);
}
