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

#include "qfilter/generators.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <locale>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "qfilter/parallel.hpp"

namespace qfilter {
namespace {

void check_operands(const Matrix& rho, const Matrix& a, const Matrix& c) {
  if (rho.rows() != rho.cols() || a.rows() != rho.rows() || a.cols() != rho.cols() || c.rows() != rho.rows() ||
      c.cols() != rho.cols()) {
    throw ShapeError("generator: operand dimensions differ");
  }
}

std::vector<double> richardson(const std::vector<double>& coarse, const std::vector<double>& fine) {
  std::vector<double> out(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return out;
}

// Smallest singular value ratio below which a coupling counts as rank one.
constexpr double kRankTol = 1e-12;

int numerical_rank(const Matrix& c) {
  Eigen::JacobiSVD<Matrix> svd(c);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTol * sv(0)) ++r;
  }
  return r;
}

double trace_pair(const Matrix& x, const Matrix& y) { return x.transpose().cwiseProduct(y).sum().real(); }

}  // namespace

double eval_count(const ObservablePolynomial& f, const Matrix& rho, const Matrix& a, const Matrix& c) {
  check_operands(rho, a, c);
  return -f.gradient_pairing(rho, kI * commutator(a, rho)) + detail::count_channel(f, rho, c);
}

double eval_dif(const ObservablePolynomial& f, const Matrix& rho, const Matrix& a, const Matrix& c) {
  check_operands(rho, a, c);
  return -f.gradient_pairing(rho, kI * commutator(a, rho)) + detail::dif_channel(f, rho, c);
}

double eval_mix(const ObservablePolynomial& f, const Matrix& rho, const GeneratorSpec& spec) {
  return eval_mix_generic(f, rho, spec);
}

Matrix lindblad_rhs(const Matrix& rho, const GeneratorSpec& spec) {
  Matrix out = -kI * commutator(spec.a, rho);
  for (const auto& ch : spec.channels) {
    out += ch.c * rho * ch.c.adjoint() - 0.5 * anticommutator(ch.c.adjoint() * ch.c, rho);
  }
  return out;
}

Matrix lindblad_adjoint_rhs(const Matrix& b, const GeneratorSpec& spec) {
  Matrix out = kI * commutator(spec.a, b);
  for (const auto& ch : spec.channels) {
    out += ch.c.adjoint() * b * ch.c - 0.5 * anticommutator(ch.c.adjoint() * ch.c, b);
  }
  return out;
}

Matrix liouvillian(const GeneratorSpec& spec) {
  const Index n = spec.dim();
  const Matrix id = Matrix::Identity(n, n);
  // vec(X rho Y) = (Y^T (x) X) vec(rho).
  Matrix l = -kI * (kron(id, spec.a) - kron(spec.a.transpose(), id));
  for (const auto& ch : spec.channels) {
    const Matrix ctc = ch.c.adjoint() * ch.c;
    l += kron(ch.c.conjugate(), ch.c) - 0.5 * (kron(id, ctc) + kron(ctc.transpose(), id));
  }
  return l;
}

Matrix lindblad_evolve(const Matrix& rho, const GeneratorSpec& spec, double s) {
  const Index n = spec.dim();
  if (rho.rows() != n || rho.cols() != n) throw ShapeError("lindblad_evolve: state dimension mismatch");
  if (s == 0.0) return rho;
  const Matrix prop = (s * liouvillian(spec)).exp();
  const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), n * n);
  const Eigen::VectorXcd out = prop * v;
  return Eigen::Map<const Matrix>(out.data(), n, n);
}

std::vector<DensityMatrix> probe_states(Index dim, std::size_t count, std::uint64_t seed, std::size_t pure) {
  std::vector<DensityMatrix> out;
  std::mt19937_64 rng(seed);
  pure = std::min(pure, count);
  if (dim == 2) {
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<Vector> qubit = {
        (Vector(2) << 1.0, 0.0).finished(),       (Vector(2) << 0.0, 1.0).finished(),
        (Vector(2) << r, r).finished(),           (Vector(2) << r, -r).finished(),
        (Vector(2) << r, kI * r).finished(),      (Vector(2) << r, -kI * r).finished(),
    };
    for (std::size_t i = 0; i < pure; ++i) {
      const Vector v = i < qubit.size() ? qubit[i] : random_unit_vector(dim, rng);
      out.push_back(PureState(v).density());
    }
  } else {
    for (std::size_t i = 0; i < pure; ++i) {
      if (static_cast<Index>(i) < dim) {
        out.push_back(DensityMatrix::basis(dim, static_cast<Index>(i)));
      } else {
        out.push_back(PureState(random_unit_vector(dim, rng)).density());
      }
    }
  }
  while (out.size() < count) out.push_back(random_mixed_state(dim, rng));
  return out;
}

double empirical_generator(const ObservablePolynomial& f, const DensityMatrix& rho, const ChainKernel& kernel) {
  const double h = kernel.step_duration();
  return (transition_operator(f, rho, kernel) - f.value(rho.matrix())) / h;
}

double empirical_generator_residual(const ObservablePolynomial& f, const GeneratorSpec& spec, double h,
                                    const std::vector<DensityMatrix>& states) {
  const ChainKernel kernel(spec, h, KernelMode::kExact);
  double worst = 0.0;
  for (const auto& rho : states) {
    const double r = std::abs(empirical_generator(f, rho, kernel) - eval_mix(f, rho.matrix(), spec));
    worst = std::max(worst, r);
  }
  return worst;
}

std::string to_string(SemigroupMethod m) {
  switch (m) {
    case SemigroupMethod::kLinear:
      return "linear";
    case SemigroupMethod::kRenewal:
      return "renewal";
    case SemigroupMethod::kMonteCarlo:
      return "monte-carlo";
  }
  return "unknown";
}

bool renewal_applicable(const GeneratorSpec& spec) {
  for (const auto& ch : spec.channels) {
    if (!ch.counting() || numerical_rank(ch.c) > 1) return false;
  }
  return true;
}

std::vector<double> renewal_semigroup(const ObservablePolynomial& f, const GeneratorSpec& spec, double s,
                                      const std::vector<DensityMatrix>& states, long intervals) {
  if (!renewal_applicable(spec)) throw ValidationError("renewal_semigroup: needs rank-one counting channels");
  if (!(s >= 0.0)) throw ValidationError("renewal_semigroup: negative time");
  if (intervals < 1) throw ValidationError("renewal_semigroup: need at least one interval");
  const Index n = spec.dim();
  std::vector<double> out;
  if (s == 0.0) {
    for (const auto& rho : states) out.push_back(f.value(rho.matrix()));
    return out;
  }
  const long m_max = intervals;
  const double dt = s / static_cast<double>(m_max);

  std::vector<Matrix> cs;
  for (const auto& ch : spec.channels) {
    if (numerical_rank(ch.c) == 1) cs.push_back(ch.c);
  }
  const std::size_t k = cs.size();

  Matrix g = -kI * spec.a;
  for (const auto& ch : spec.channels) g -= 0.5 * ch.c.adjoint() * ch.c;
  const Matrix step = (dt * g).exp();

  // No-jump flow xi_m = E^m rho E^m^dagger on the grid, with survival
  // weight tr(xi_m) f(xi_m / tr xi_m) and jump densities tr(C_j xi_m C_j*).
  auto flow = [&](const Matrix& rho, std::vector<double>& survival, std::vector<std::vector<double>>& density) {
    survival.assign(static_cast<std::size_t>(m_max + 1), 0.0);
    density.assign(k, std::vector<double>(static_cast<std::size_t>(m_max + 1), 0.0));
    Matrix e = Matrix::Identity(n, n);
    for (long m = 0; m <= m_max; ++m) {
      const Matrix xi = e * rho * e.adjoint();
      const double tr = xi.trace().real();
      if (tr > 1e-300) survival[m] = tr * f.value(xi / tr);
      for (std::size_t j = 0; j < k; ++j) density[j][m] = trace_pair(cs[j].adjoint() * cs[j], xi);
      e = step * e;
    }
  };

  // W_j(r) = T_r f(J_j) for the post-jump states J_j = C_j C_j* / tr(C_j C_j*).
  std::vector<std::vector<double>> w(k, std::vector<double>(static_cast<std::size_t>(m_max + 1), 0.0));
  std::vector<std::vector<std::vector<double>>> q(k);  // q[j][l][m]
  std::vector<std::vector<double>> surv_j(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Matrix cc = cs[j] * cs[j].adjoint();
    flow(cc / cc.trace().real(), surv_j[j], q[j]);
    w[j][0] = surv_j[j][0];
  }
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(static_cast<Index>(k), static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < k; ++l) lhs(static_cast<Index>(j), static_cast<Index>(l)) -= 0.5 * dt * q[j][l][0];
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
  Eigen::VectorXd rhs(static_cast<Index>(k));
  for (long m = 1; m <= m_max; ++m) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = surv_j[j][m];
      for (std::size_t l = 0; l < k; ++l) {
        const auto& ql = q[j][l];
        const auto& wl = w[l];
        double conv = 0.5 * ql[m] * wl[0];
        for (long i = 1; i < m; ++i) conv += ql[i] * wl[m - i];
        acc += dt * conv;
      }
      rhs(static_cast<Index>(j)) = acc;
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (std::size_t j = 0; j < k; ++j) w[j][m] = sol(static_cast<Index>(j));
  }

  for (const auto& rho : states) {
    std::vector<double> surv;
    std::vector<std::vector<double>> dens;
    flow(rho.matrix(), surv, dens);
    double value = surv[m_max];
    for (std::size_t j = 0; j < k; ++j) {
      double conv = 0.5 * (dens[j][0] * w[j][m_max] + dens[j][m_max] * w[j][0]);
      for (long i = 1; i < m_max; ++i) conv += dens[j][i] * w[j][m_max - i];
      value += dt * conv;
    }
    out.push_back(value);
  }
  return out;
}

SemigroupReference semigroup_reference(const ObservablePolynomial& f, const GeneratorSpec& spec, double s,
                                       const std::vector<DensityMatrix>& states, const SemigroupOptions& options) {
  spec.validate();
  if (!(s >= 0.0)) throw ValidationError("semigroup_reference: negative time");
  SemigroupReference ref;
  if (f.is_affine()) {
    ref.method = SemigroupMethod::kLinear;
    for (const auto& rho : states) ref.values.push_back(f.value(lindblad_evolve(rho.matrix(), spec, s)));
    ref.std_errors.assign(states.size(), 0.0);
    return ref;
  }
  if (renewal_applicable(spec)) {
    ref.method = SemigroupMethod::kRenewal;
    const long m = options.renewal_intervals;
    ref.values = richardson(renewal_semigroup(f, spec, s, states, m), renewal_semigroup(f, spec, s, states, 2 * m));
    ref.std_errors.assign(states.size(), 0.0);
    return ref;
  }
  ref.method = SemigroupMethod::kMonteCarlo;
  const ChainKernel kernel(spec, options.mc_step, KernelMode::kExact);
  const WaitingLaw clock = WaitingLaw::degenerate(options.mc_step);
  TrajectoryOptions topt;
  topt.endpoints_only = true;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto samples = map_paths<double>(options.mc_paths, [&](std::size_t p) {
      const auto rec = sample_trajectory(states[i], kernel, clock, s, options.mc_seed + i * options.mc_paths + p, topt);
      return f.value(rec.states.back().matrix());
    });
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= static_cast<double>(samples.size() > 1 ? samples.size() - 1 : 1);
    ref.values.push_back(mean);
    ref.std_errors.push_back(std::sqrt(var / static_cast<double>(samples.size())));
  }
  return ref;
}

std::string spec_hash(const HamiltonianSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double x) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  };
  auto mix_matrix = [&mix](const Matrix& m) {
    mix(static_cast<double>(m.rows()));
    for (Index i = 0; i < m.size(); ++i) {
      mix(m.data()[i].real());
      mix(m.data()[i].imag());
    }
  };
  mix_matrix(spec.a);
  mix(spec.b ? 1.0 : 0.0);
  if (spec.b) mix_matrix(*spec.b);
  for (const auto& ch : spec.channels) {
    mix_matrix(ch.c);
    mix(ch.phi);
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string residual_table_csv(const std::vector<ResidualRow>& rows, const std::string& hash) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "h,residual,channel_config_hash\n";
  for (const auto& r : rows) os << r.h << "," << r.residual << "," << hash << "\n";
  return os.str();
}

}  // namespace qfilter
