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

#include "qfilter/ctrw.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <optional>
#include <sstream>

#include "qfilter/generators.hpp"

namespace qfilter {
namespace {

void check_beta_open(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("stable subordinator: beta must lie in (0, 1)");
}

void check_beta_caputo(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("caputo_derivative: beta must lie in (0, 1]");
}

}  // namespace

double sample_stable(double beta, std::mt19937_64& rng) {
  check_beta_open(beta);
  std::uniform_real_distribution<double> unif(0.0, M_PI);
  std::exponential_distribution<double> expo(1.0);
  for (;;) {
    const double u = unif(rng);
    const double e = expo(rng);
    if (u <= 0.0 || e <= 0.0) continue;
    const double z = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta) *
                     std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    if (std::isfinite(z) && z > 0.0) return z;
  }
}

double sample_inverse_stable(double beta, double t, std::mt19937_64& rng) {
  if (t < 0.0) throw RangeError("sample_inverse_stable: negative time");
  if (t == 0.0) return 0.0;
  return std::pow(t / sample_stable(beta, rng), beta);
}

SubordinatorPath simulate_subordinator(double beta, const std::vector<double>& t_grid, std::mt19937_64& rng) {
  check_beta_open(beta);
  if (t_grid.empty() || t_grid.front() != 0.0) throw FormatError("simulate_subordinator: grid must start at 0");
  SubordinatorPath path;
  path.beta = beta;
  path.grid = t_grid;
  path.values.assign(t_grid.size(), 0.0);
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double ds = t_grid[k] - t_grid[k - 1];
    if (!(ds > 0.0)) throw FormatError("simulate_subordinator: grid must be increasing");
    path.values[k] = path.values[k - 1] + std::pow(ds, 1.0 / beta) * sample_stable(beta, rng);
  }
  return path;
}

SubordinatorPath simulate_subordinator_until(double beta, double ds, double level, std::mt19937_64& rng) {
  check_beta_open(beta);
  if (!(ds > 0.0)) throw ValidationError("simulate_subordinator_until: ds must be positive");
  SubordinatorPath path;
  path.beta = beta;
  path.grid.push_back(0.0);
  path.values.push_back(0.0);
  const double scale = std::pow(ds, 1.0 / beta);
  while (path.values.back() <= level) {
    path.grid.push_back(static_cast<double>(path.grid.size()) * ds);
    path.values.push_back(path.values.back() + scale * sample_stable(beta, rng));
  }
  return path;
}

double inverse_subordinator(const SubordinatorPath& path, double t) {
  if (path.values.empty()) throw RangeError("inverse_subordinator: empty path");
  if (t < 0.0) throw RangeError("inverse_subordinator: negative time");
  if (path.values.back() <= t) throw RangeError("inverse_subordinator: path does not reach t; extend it");
  const auto it = std::upper_bound(path.values.begin(), path.values.end(), t);
  return path.grid[static_cast<std::size_t>(it - path.values.begin()) - 1];
}

double ctrw_scale(double beta, double h) {
  check_beta_open(beta);
  return h * beta / std::tgamma(1.0 - beta);
}

long ctrw_event_count(const WaitingLaw& law, double t, std::mt19937_64& rng) {
  long n = 0;
  double clock = 0.0;
  for (;;) {
    clock += sample_waiting(law, rng);
    if (clock > t) return n;
    ++n;
  }
}

TimeSeries TimeSeries::uniform(double dt, std::size_t points) {
  TimeSeries s;
  s.dt = dt;
  for (std::size_t k = 0; k < points; ++k) s.times.push_back(static_cast<double>(k) * dt);
  s.values.assign(points, 0.0);
  return s;
}

void TimeSeries::check_uniform(std::size_t min_points) const {
  if (times.size() != values.size()) throw FormatError("TimeSeries: times and values differ in length");
  if (times.size() < min_points) throw FormatError("TimeSeries: too few points");
  if (!(dt > 0.0)) throw FormatError("TimeSeries: spacing must be positive");
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double expect = times.front() + static_cast<double>(k) * dt;
    if (std::abs(times[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      throw FormatError("TimeSeries: grid is not uniform");
    }
  }
}

TimeSeries caputo_derivative(const TimeSeries& series, double beta) {
  check_beta_caputo(beta);
  series.check_uniform(3);
  const std::size_t n = series.values.size() - 1;
  std::vector<double> b(n);
  // b_0 = 1 for every order; pow(0, 0) = 1 would zero it at beta = 1.
  if (n > 0) b[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::pow(static_cast<double>(k + 1), 1.0 - beta) - std::pow(static_cast<double>(k), 1.0 - beta);
  }
  const double pre = std::pow(series.dt, -beta) / std::tgamma(2.0 - beta);
  TimeSeries out;
  out.dt = series.dt;
  const auto& f = series.values;
  for (std::size_t m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += b[k] * (f[m - k] - f[m - k - 1]);
    out.times.push_back(series.times[m]);
    out.values.push_back(pre * acc);
  }
  return out;
}

double mixture_tail(const WaitingLaw& law, double t) {
  if (law.kind != WaitingLaw::Kind::kMixture) throw ValidationError("mixed_caputo: law must be a mixture");
  if (!(t > 0.0)) throw RangeError("mixture_tail: t must be positive");
  double acc = 0.0;
  for (const auto& c : law.components) acc += c.weight * std::pow(t, -c.beta) / c.beta;
  return acc;
}

TimeSeries mixed_caputo(const TimeSeries& series, const WaitingLaw& law) {
  law.validate();
  if (law.kind != WaitingLaw::Kind::kMixture) throw ValidationError("mixed_caputo: law must be a mixture");
  series.check_uniform(3);
  const double h = series.dt;
  const std::size_t n = series.values.size() - 1;
  const auto& f = series.values;
  TimeSeries out;
  out.dt = h;
  for (std::size_t m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (const auto& c : law.components) {
      const double be = c.beta;
      double part = 0.0;
      // Cell [k h, (k + 1) h] of the lag s, with f_(t - s) linear in s.
      for (std::size_t k = 0; k < m; ++k) {
        const double x0 = static_cast<double>(k) * h;
        const double x1 = x0 + h;
        const double a = f[m - k] - f[m];
        const double slope = (f[m - k - 1] - f[m - k]) / h;
        if (k == 0) {
          part += slope * std::pow(x1, 1.0 - be) / (1.0 - be);
        } else {
          const double i_neg = (std::pow(x0, -be) - std::pow(x1, -be)) / be;            // int s^(-1-beta)
          const double i_pos = (std::pow(x1, 1.0 - be) - std::pow(x0, 1.0 - be)) / (1.0 - be);  // int s^(-beta)
          part += a * i_neg + slope * (i_pos - x0 * i_neg);
        }
      }
      acc += c.weight * part;
    }
    acc += (f[0] - f[m]) * mixture_tail(law, series.times[m] - series.times[0]);
    out.times.push_back(series.times[m]);
    out.values.push_back(acc);
  }
  return out;
}

std::string FractionalReport::to_csv() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "t,caputo,generator,residual\n";
  for (const auto& p : points) os << p.t << "," << p.lhs << "," << p.rhs << "," << p.residual << "\n";
  return os.str();
}

FractionalReport verify_fractional_equation(const TimeSeries& g, const TimeSeries& lg, double beta) {
  if (lg.values.size() != g.values.size()) throw FormatError("verify_fractional_equation: series lengths differ");
  const TimeSeries d = caputo_derivative(g, beta);
  FractionalReport rep;
  double scale = 0.0;
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    FractionalPoint p;
    p.t = d.times[k];
    p.lhs = d.values[k];
    p.rhs = lg.values[k + 1];
    p.residual = p.lhs - p.rhs;
    rep.max_residual = std::max(rep.max_residual, std::abs(p.residual));
    scale = std::max(scale, std::abs(p.rhs));
    rep.points.push_back(p);
  }
  rep.relative_residual = scale > 0.0 ? rep.max_residual / scale : rep.max_residual;
  return rep;
}

TimeSeries SubordinatedSamples::mean_f() const {
  TimeSeries s = grid;
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    double acc = 0.0;
    for (const auto& p : f) acc += p[k];
    s.values[k] = f.empty() ? 0.0 : acc / static_cast<double>(f.size());
  }
  return s;
}

TimeSeries SubordinatedSamples::mean_lf() const {
  TimeSeries s = grid;
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    double acc = 0.0;
    for (const auto& p : lf) acc += p[k];
    s.values[k] = lf.empty() ? 0.0 : acc / static_cast<double>(lf.size());
  }
  return s;
}

std::vector<double> SubordinatedSamples::std_error_f() const {
  std::vector<double> out(grid.values.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<double> col;
    col.reserve(f.size());
    for (const auto& p : f) col.push_back(p[k]);
    out[k] = mean_se(col).std_error;
  }
  return out;
}

SubordinatedSamples subordinated_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                         const SdeIntegrator& integrator, double beta, const TimeSeries& grid,
                                         std::size_t n_paths, std::uint64_t base_seed, Execution exec) {
  grid.check_uniform(1);
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("subordinated_samples: beta must lie in (0, 1]");
  const GeneratorSpec& spec = integrator.config().spec;
  const double dt = integrator.config().dt;
  const double t_max = grid.times.back();
  using Row = std::optional<std::pair<std::vector<double>, std::vector<double>>>;
  const auto rows = map_paths<Row>(
      n_paths,
      [&](std::size_t i) -> Row {
        std::mt19937_64 rng(base_seed + i);
        std::vector<double> clock(grid.times.size());
        if (beta < 1.0) {
          const SubordinatorPath path = simulate_subordinator_until(beta, dt, t_max, rng);
          for (std::size_t k = 0; k < clock.size(); ++k) clock[k] = inverse_subordinator(path, grid.times[k]);
        } else {
          clock = grid.times;
        }
        try {
          const auto states = integrator.evolve_to(rho0.matrix(), clock, rng);
          std::vector<double> fv, lv;
          for (const auto& s : states) {
            fv.push_back(f.value(s));
            lv.push_back(eval_mix(f, s, spec));
          }
          return std::make_pair(std::move(fv), std::move(lv));
        } catch (const IntegrationFailure&) {
          return std::nullopt;
        } catch (const DegenerateStateError&) {
          return std::nullopt;
        }
      },
      exec);
  SubordinatedSamples out;
  out.grid = grid;
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed_paths;
      continue;
    }
    out.f.push_back(r->first);
    out.lf.push_back(r->second);
  }
  return out;
}

TimeSeries subordinated_expectation(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                    const SdeIntegrator& integrator, double beta, const TimeSeries& grid,
                                    std::size_t n_paths, std::uint64_t base_seed, Execution exec) {
  return subordinated_samples(f, rho0, integrator, beta, grid, n_paths, base_seed, exec).mean_f();
}

std::vector<double> subordinated_final_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                               const SdeIntegrator& integrator, double beta, double t,
                                               std::size_t n_paths, std::uint64_t base_seed, Execution exec) {
  return map_paths<double>(
      n_paths,
      [&](std::size_t i) {
        std::mt19937_64 rng(base_seed + i);
        const double sigma = beta < 1.0 ? sample_inverse_stable(beta, t, rng) : t;
        return f.value(integrator.evolve(rho0.matrix(), sigma, rng));
      },
      exec);
}

std::vector<double> ctrw_chain_samples(const ObservablePolynomial& f, const DensityMatrix& rho0,
                                       const HamiltonianSpec& spec, double h, double beta, double t,
                                       std::size_t n_paths, std::uint64_t base_seed, Execution exec) {
  const ChainKernel kernel(spec, h, KernelMode::kExact);
  const WaitingLaw law = WaitingLaw::stable_tail(beta, ctrw_scale(beta, h));
  TrajectoryOptions opt;
  opt.endpoints_only = true;
  return map_paths<double>(
      n_paths,
      [&](std::size_t i) {
        const auto rec = sample_trajectory(rho0, kernel, law, t, base_seed + i, opt);
        return f.value(rec.states.back().matrix());
      },
      exec);
}

}  // namespace qfilter
