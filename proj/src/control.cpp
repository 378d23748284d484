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

#include "qfilter/control.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <sstream>

#include "json.hpp"
#include "qfilter/ctrw.hpp"
#include "qfilter/generators.hpp"

namespace qfilter {
namespace {

double pair_trace(const Matrix& x, const Matrix& y) { return x.transpose().cwiseProduct(y).sum().real(); }

// Asymptotic kernels for every control pair, [u][v].
struct ControlKernels {
  std::vector<std::vector<ChainKernel>> k;

  ControlKernels(const ControlProblem& problem, const HamiltonianSpec& spec, double h) {
    for (double u : problem.u_grid) {
      std::vector<ChainKernel> row;
      for (double v : problem.v_grid) {
        HamiltonianSpec s = spec;
        s.a = problem.hamiltonian(u, v);
        row.emplace_back(std::move(s), h, problem.kernel);
      }
      k.push_back(std::move(row));
    }
  }
};

struct Choice {
  double maxmin = 0.0;
  double minmax = 0.0;
  int u = 0;
  int v = 0;
};

// Continuation values Q(u, v) = sum_w p_w V(rho_w) and the game solution
// with lowest-index tie-breaking.
Choice solve_game(const ControlKernels& kernels, const StateMesh& mesh, const std::vector<double>& next,
                  const Matrix& rho, std::size_t* outside_count) {
  const std::size_t nu = kernels.k.size();
  const std::size_t nv = kernels.k.front().size();
  std::vector<double> q(nu * nv, 0.0);
  for (std::size_t i = 0; i < nu; ++i) {
    for (std::size_t j = 0; j < nv; ++j) {
      const ChainKernel& kernel = kernels.k[i][j];
      double acc = 0.0;
      for (int w = 0; w < kernel.words(); ++w) {
        // Unclipped post-states keep the recursion affine in rho.
        const Matrix x = kernel.unnormalized(rho, static_cast<OutcomeWord>(w));
        const double p = x.trace().real();
        if (std::abs(p) < kDropProbability) continue;
        bool outside = false;
        acc += p * mesh.interpolate(next, 0.5 * (x + x.adjoint()) / p, &outside);
        if (outside && outside_count) ++*outside_count;
      }
      q[i * nv + j] = acc;
    }
  }
  Choice c;
  c.maxmin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t j = 0; j < nv; ++j) {
      if (q[i * nv + j] < best) {
        best = q[i * nv + j];
        arg = static_cast<int>(j);
      }
    }
    if (best > c.maxmin) {
      c.maxmin = best;
      c.u = static_cast<int>(i);
      c.v = arg;
    }
  }
  c.minmax = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nv; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nu; ++i) best = std::max(best, q[i * nv + j]);
    c.minmax = std::min(c.minmax, best);
  }
  return c;
}

// Central differences of the interpolated value in Bloch coordinates.
class MeshFunction {
 public:
  MeshFunction(const BlochGridMesh& mesh, const std::vector<double>& values)
      : mesh_(mesh), values_(values), step_(mesh.spacing()) {}

  double value(const Matrix& rho) const { return at(bloch_vector(rho)); }

  double gradient_pairing(const Matrix& rho, const Matrix& x) const {
    const Eigen::Vector3d r = bloch_vector(rho);
    const Eigen::Vector3d d = bloch_vector(x);
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(i) = step_;
      acc += (at(r + e) - at(r - e)) / (2.0 * step_) * d(i);
    }
    return acc;
  }

  double hessian_form(const Matrix& rho, const Matrix& x) const {
    const Eigen::Vector3d r = bloch_vector(rho);
    const Eigen::Vector3d d = bloch_vector(x);
    const double norm = d.norm();
    if (norm == 0.0) return 0.0;
    // Second directional difference along d.
    const Eigen::Vector3d e = step_ * d / norm;
    return (at(r + e) - 2.0 * at(r) + at(r - e)) / (step_ * step_) * norm * norm;
  }

  double max_second_difference(const Matrix& rho) const {
    const Eigen::Vector3d r = bloch_vector(rho);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(i) = step_;
      worst = std::max(worst, std::abs(at(r + e) - 2.0 * at(r) + at(r - e)));
    }
    return worst;
  }

 private:
  double at(const Eigen::Vector3d& r) const { return mesh_.interpolate(values_, state_from_bloch(r)); }

  const BlochGridMesh& mesh_;
  const std::vector<double>& values_;
  double step_;
};

}  // namespace

void ControlProblem::validate() const {
  const Index n = h0.rows();
  auto check = [n](const Matrix& m, const char* name) {
    if (m.rows() != n || m.cols() != n) throw ShapeError(std::string("ControlProblem: ") + name + " has the wrong size");
    if (!is_hermitian(m)) throw ValidationError(std::string("ControlProblem: ") + name + " is not Hermitian");
  };
  if (n == 0) throw ShapeError("ControlProblem: empty H0");
  check(h0, "H0");
  check(h1, "H1");
  check(h2, "H2");
  check(running_cost, "J");
  check(terminal_cost, "F");
  if (u_grid.empty()) throw ValidationError("ControlProblem: U must not be empty");
  if (v_grid.empty()) throw ValidationError("ControlProblem: V must not be empty");
  if (!(horizon >= 0.0)) throw ValidationError("ControlProblem: horizon must be nonnegative");
  if (!markov && !(beta > 0.0 && beta < 1.0)) throw ValidationError("ControlProblem: beta must lie in (0, 1)");
}

Matrix ControlProblem::hamiltonian(double u, double v) const { return h0 + u * h1 + v * h2; }

Eigen::Vector3d bloch_vector(const Matrix& rho) {
  if (rho.rows() != 2 || rho.cols() != 2) throw ShapeError("bloch_vector: qubit operator expected");
  return Eigen::Vector3d(2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real());
}

Matrix state_from_bloch(const Eigen::Vector3d& r) {
  Matrix m(2, 2);
  m(0, 0) = 0.5 * (1.0 + r(2));
  m(1, 1) = 0.5 * (1.0 - r(2));
  m(0, 1) = 0.5 * Complex(r(0), -r(1));
  m(1, 0) = 0.5 * Complex(r(0), r(1));
  return m;
}

BlochGridMesh::BlochGridMesh(int points) : points_(points) {
  if (points < 3) throw ValidationError("BlochGridMesh: need at least 3 points per axis");
  const double s = spacing();
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      for (int k = 0; k < points; ++k) {
        nodes_.push_back(state_from_bloch(Eigen::Vector3d(-1.0 + i * s, -1.0 + j * s, -1.0 + k * s)));
      }
    }
  }
}

bool is_state_node(const StateMesh& mesh, std::size_t k) { return min_eigenvalue(mesh.node(k)) >= -1e-12; }

double BlochGridMesh::interpolate(const std::vector<double>& values, const Matrix& rho, bool* outside) const {
  if (values.size() != nodes_.size()) throw ShapeError("BlochGridMesh: value array size mismatch");
  const Eigen::Vector3d r = bloch_vector(rho);
  const double s = spacing();
  const double top = static_cast<double>(points_ - 1);
  if (outside) *outside = false;
  int idx[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (r(a) + 1.0) / s;
    if ((u < -1e-9 || u > top + 1e-9) && outside) *outside = true;
    idx[a] = std::clamp(static_cast<int>(std::floor(u)), 0, points_ - 2);
    frac[a] = u - idx[a];
  }
  double acc = 0.0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) * (dk ? frac[2] : 1.0 - frac[2]);
        const std::size_t node =
            (static_cast<std::size_t>(idx[0] + di) * points_ + (idx[1] + dj)) * points_ + (idx[2] + dk);
        acc += w * values[node];
      }
    }
  }
  return acc;
}

std::string BlochGridMesh::describe() const {
  std::ostringstream os;
  os << "bloch-grid(" << points_ << ")";
  return os.str();
}

SampleMesh::SampleMesh(Index dim, std::size_t count, std::uint64_t seed) : dim_(dim) {
  if (dim < 2) throw ValidationError("SampleMesh: dimension must be at least 2");
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < dim && states_.size() < count; ++k) states_.push_back(DensityMatrix::basis(dim, k));
  while (states_.size() < count) {
    if (states_.size() % 2 == 0) {
      states_.push_back(PureState(random_unit_vector(dim, rng)).density());
    } else {
      states_.push_back(random_mixed_state(dim, rng));
    }
  }
}

double SampleMesh::interpolate(const std::vector<double>& values, const Matrix& rho, bool* outside) const {
  if (values.size() != states_.size()) throw ShapeError("SampleMesh: value array size mismatch");
  if (outside) *outside = false;
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const double d = (states_[k].matrix() - rho).squaredNorm();
    if (d < dist) {
      dist = d;
      best = k;
    }
  }
  return values[best];
}

std::string SampleMesh::describe() const {
  std::ostringstream os;
  os << "sample(" << dim_ << "," << states_.size() << ")";
  return os.str();
}

EventWeights event_weights(const ControlProblem& problem, double h, std::size_t samples, std::uint64_t seed,
                           double tail_mass) {
  if (!(h > 0.0)) throw ValidationError("event_weights: h must be positive");
  EventWeights w;
  const double t = problem.horizon;
  if (problem.markov) {
    const long n = std::lround(t / h);
    if (std::abs(static_cast<double>(n) * h - t) > 1e-9 * std::max(1.0, t)) {
      throw ValidationError("event_weights: the horizon must be a multiple of h");
    }
    w.occupation.assign(static_cast<std::size_t>(n + 1), h);
    w.occupation.back() = 0.0;
    w.terminal.assign(static_cast<std::size_t>(n + 1), 0.0);
    w.terminal.back() = 1.0;
    return w;
  }
  if (t == 0.0) {
    w.occupation = {0.0};
    w.terminal = {1.0};
    return w;
  }
  const WaitingLaw law = WaitingLaw::stable_tail(problem.beta, ctrw_scale(problem.beta, h));
  std::mt19937_64 rng(seed);
  std::vector<double> occ;
  std::vector<double> counts;
  std::vector<double> final_counts;
  for (std::size_t s = 0; s < samples; ++s) {
    double clock = 0.0;
    std::size_t n = 0;
    for (;;) {
      const double tau = sample_waiting(law, rng);
      if (occ.size() <= n) occ.resize(n + 1, 0.0);
      occ[n] += std::min(clock + tau, t) - clock;
      if (clock + tau > t) break;
      clock += tau;
      ++n;
    }
    if (counts.size() <= n) counts.resize(n + 1, 0.0);
    counts[n] += 1.0;
    final_counts.push_back(static_cast<double>(n));
  }
  const std::size_t n_max = static_cast<std::size_t>(std::ceil(quantile(final_counts, 1.0 - tail_mass)));
  w.occupation.assign(n_max + 1, 0.0);
  w.terminal.assign(n_max + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t n = 0; n < occ.size(); ++n) w.occupation[std::min(n, n_max)] += occ[n] * inv;
  for (std::size_t n = 0; n < counts.size(); ++n) w.terminal[std::min(n, n_max)] += counts[n] * inv;
  return w;
}

std::string ValueTable::to_json() const {
  nlohmann::json j;
  j["h"] = h;
  j["mesh"] = mesh;
  j["isaacs_gap"] = isaacs_gap;
  j["extrapolations"] = extrapolations;
  j["occupation"] = weights.occupation;
  j["terminal"] = weights.terminal;
  j["values"] = values;
  j["u_index"] = u_index;
  j["v_index"] = v_index;
  return j.dump();
}

ValueTable dp_solve(const ControlProblem& problem, const HamiltonianSpec& spec, double h, const StateMesh& mesh,
                    Execution exec) {
  problem.validate();
  if (spec.channels.empty()) throw ValidationError("dp_solve: the chain needs at least one channel");
  if (mesh.dim() != problem.h0.rows()) throw ShapeError("dp_solve: mesh dimension differs from the problem");
  const ControlKernels kernels(problem, spec, h);
  ValueTable table;
  table.h = h;
  table.mesh = mesh.describe();
  table.weights = event_weights(problem, h);
  table.isaacs_gap = -std::numeric_limits<double>::infinity();
  const std::size_t layers = table.weights.occupation.size();
  const std::size_t nodes = mesh.size();
  table.values.assign(layers, std::vector<double>(nodes, 0.0));
  table.u_index.assign(layers, std::vector<int>(nodes, -1));
  table.v_index.assign(layers, std::vector<int>(nodes, -1));

  auto base = [&](std::size_t n, std::size_t k) {
    const Matrix& rho = mesh.node(k);
    return table.weights.occupation[n] * pair_trace(problem.running_cost, rho) +
           table.weights.terminal[n] * pair_trace(problem.terminal_cost, rho);
  };
  for (std::size_t k = 0; k < nodes; ++k) table.values[layers - 1][k] = base(layers - 1, k);

  struct NodeResult {
    Choice choice;
    std::size_t outside = 0;
  };
  for (std::size_t n = layers - 1; n-- > 0;) {
    const std::vector<double>& next = table.values[n + 1];
    const auto results = map_paths<NodeResult>(
        nodes,
        [&](std::size_t k) {
          NodeResult r;
          r.choice = solve_game(kernels, mesh, next, mesh.node(k), &r.outside);
          return r;
        },
        exec);
    for (std::size_t k = 0; k < nodes; ++k) {
      table.values[n][k] = base(n, k) + results[k].choice.maxmin;
      table.u_index[n][k] = results[k].choice.u;
      table.v_index[n][k] = results[k].choice.v;
      table.isaacs_gap = std::max(table.isaacs_gap, results[k].choice.maxmin - results[k].choice.minmax);
      table.extrapolations += results[k].outside;
    }
  }
  if (layers == 1) table.isaacs_gap = 0.0;
  return table;
}

Policy constant_policy(int u_index, int v_index) {
  return [u_index, v_index](std::size_t, const Matrix&) { return std::make_pair(u_index, v_index); };
}

Policy dp_policy(const ControlProblem& problem, const HamiltonianSpec& spec, double h, const StateMesh& mesh,
                 std::shared_ptr<const ValueTable> table) {
  auto kernels = std::make_shared<const ControlKernels>(problem, spec, h);
  return [kernels, &mesh, table](std::size_t n, const Matrix& rho) {
    const std::size_t layer = std::min(n + 1, table->layers() - 1);
    const Choice c = solve_game(*kernels, mesh, table->values[layer], rho, nullptr);
    return std::make_pair(c.u, c.v);
  };
}

MeanSe evaluate_policy_mc(const ControlProblem& problem, const HamiltonianSpec& spec, double h,
                          const DensityMatrix& rho0, const Policy& policy, std::size_t n_paths,
                          std::uint64_t base_seed, Execution exec) {
  problem.validate();
  const ControlKernels kernels(problem, spec, h);
  const double t = problem.horizon;
  const WaitingLaw law = problem.markov ? WaitingLaw::degenerate(h)
                                        : WaitingLaw::stable_tail(problem.beta, ctrw_scale(problem.beta, h));
  long markov_steps = 0;
  if (problem.markov) markov_steps = static_cast<long>(event_weights(problem, h).occupation.size()) - 1;
  const auto payoffs = map_paths<double>(
      n_paths,
      [&](std::size_t i) {
        std::mt19937_64 rng(base_seed + i);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        DensityMatrix rho = rho0;
        double payoff = 0.0;
        double clock = 0.0;
        std::size_t n = 0;
        for (;;) {
          double occupied = 0.0;
          bool done = false;
          if (problem.markov) {
            done = static_cast<long>(n) >= markov_steps;
            occupied = done ? 0.0 : h;
          } else {
            const double tau = sample_waiting(law, rng);
            occupied = std::min(clock + tau, t) - clock;
            done = clock + tau > t;
            clock += tau;
          }
          payoff += occupied * pair_trace(problem.running_cost, rho.matrix());
          if (done) break;
          const auto [ui, vi] = policy(n, rho.matrix());
          rho = kernels.k[static_cast<std::size_t>(ui)][static_cast<std::size_t>(vi)].sample(rho, unif(rng)).state;
          ++n;
        }
        return payoff + pair_trace(problem.terminal_cost, rho.matrix());
      },
      exec);
  return mean_se(payoffs);
}

ValueSeries value_series(const ControlProblem& problem, const HamiltonianSpec& spec, double h,
                         const BlochGridMesh& mesh, double delta, std::size_t steps,
                         const std::vector<DensityMatrix>& probes, Execution exec) {
  ValueSeries series;
  series.delta = delta;
  series.probes = probes;
  auto record = [&](std::shared_ptr<const ValueTable> table, std::size_t layer) {
    std::vector<double> row;
    for (const auto& p : probes) row.push_back(mesh.interpolate(table->values[layer], p.matrix()));
    series.at_probes.push_back(std::move(row));
    // Keep the layer as its own single-layer table for gradient evaluation.
    auto single = std::make_shared<ValueTable>();
    single->h = table->h;
    single->mesh = table->mesh;
    single->values = {table->values[layer]};
    series.tables.push_back(std::move(single));
  };
  if (problem.markov) {
    const long ratio = std::lround(delta / h);
    if (ratio < 1 || std::abs(static_cast<double>(ratio) * h - delta) > 1e-9) {
      throw ValidationError("value_series: delta must be a multiple of h");
    }
    ControlProblem p = problem;
    p.horizon = delta * static_cast<double>(steps);
    auto table = std::make_shared<const ValueTable>(dp_solve(p, spec, h, mesh, exec));
    const std::size_t last = table->layers() - 1;
    for (std::size_t k = 0; k <= steps; ++k) record(table, last - k * static_cast<std::size_t>(ratio));
    return series;
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    ControlProblem p = problem;
    p.horizon = delta * static_cast<double>(k);
    auto table = std::make_shared<const ValueTable>(dp_solve(p, spec, h, mesh, exec));
    record(table, 0);
  }
  return series;
}

std::string HjbReport::to_csv() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "tau,state,lhs,rhs,residual\n";
  for (const auto& p : points) os << p.tau << "," << p.state << "," << p.lhs << "," << p.rhs << "," << p.residual << "\n";
  return os.str();
}

HjbReport hjb_residual(const ControlProblem& problem, const HamiltonianSpec& spec, const BlochGridMesh& mesh,
                       const ValueSeries& series, double beta) {
  problem.validate();
  if (series.at_probes.size() < 3) throw FormatError("hjb_residual: need at least three time points");
  HamiltonianSpec gen = spec;
  gen.a = problem.h0;
  HjbReport report;
  const std::size_t np = series.probes.size();
  const std::size_t nt = series.at_probes.size();
  double time_budget = 0.0;
  double mesh_budget = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    TimeSeries s = TimeSeries::uniform(series.delta, nt);
    for (std::size_t k = 0; k < nt; ++k) s.values[k] = series.at_probes[k][p];
    const TimeSeries d = caputo_derivative(s, beta);
    // Same operator on the grid of step 2 delta, for the discretization term.
    TimeSeries coarse = TimeSeries::uniform(2.0 * series.delta, (nt + 1) / 2);
    for (std::size_t k = 0; k < coarse.values.size(); ++k) coarse.values[k] = s.values[2 * k];
    const TimeSeries dc = coarse.values.size() >= 3 ? caputo_derivative(coarse, beta) : TimeSeries{};
    for (std::size_t k = 0; k + 1 < dc.values.size() + 1 && k < dc.values.size(); ++k) {
      time_budget = std::max(time_budget, std::abs(dc.values[k] - d.values[2 * k + 1]));
    }
    const Matrix& rho = series.probes[p].matrix();
    for (std::size_t k = 1; k < nt; ++k) {
      const MeshFunction fn(mesh, series.tables[k]->values.front());
      double best_u = -std::numeric_limits<double>::infinity();
      for (double u : problem.u_grid) best_u = std::max(best_u, fn.gradient_pairing(rho, kI * commutator(rho, u * problem.h1)));
      double best_v = std::numeric_limits<double>::infinity();
      for (double v : problem.v_grid) best_v = std::min(best_v, fn.gradient_pairing(rho, kI * commutator(rho, v * problem.h2)));
      HjbPoint pt;
      pt.tau = series.delta * static_cast<double>(k);
      pt.state = p;
      pt.lhs = d.values[k - 1];
      pt.rhs = best_u + best_v + pair_trace(problem.running_cost, rho) + eval_mix_generic(fn, rho, gen);
      pt.residual = pt.lhs - pt.rhs;
      report.max_residual = std::max(report.max_residual, std::abs(pt.residual));
      mesh_budget = std::max(mesh_budget, fn.max_second_difference(rho));
      report.points.push_back(pt);
    }
  }
  report.budget = time_budget + mesh_budget;
  return report;
}

}  // namespace qfilter
