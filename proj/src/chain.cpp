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

#include "qfilter/chain.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace qfilter {
namespace {

Eigen::MatrixXd probe_identity(int probes) {
  return Eigen::MatrixXd::Identity(Index{1} << probes, Index{1} << probes);
}

// |1><0| on probe j of (C^2)^K, first probe most significant.
Eigen::MatrixXd raise_on_probe(int probes, int j) {
  const Index words = Index{1} << probes;
  const Index bit = Index{1} << (probes - 1 - j);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(words, words);
  for (Index w = 0; w < words; ++w) {
    if ((w & bit) == 0) x(w | bit, w) = 1.0;
  }
  return x;
}

// P^1_{i_1} (x) ... (x) P^K_{i_K} for outcome word w.
Eigen::MatrixXd word_projector(const std::vector<ProjectorPair>& pairs, OutcomeWord w) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(1, 1);
  const int k = static_cast<int>(pairs.size());
  for (int j = 0; j < k; ++j) {
    const int bit = (w >> (k - 1 - j)) & 1u;
    const Eigen::Matrix2d& pj = pairs[j][bit];
    Eigen::MatrixXd next(p.rows() * 2, p.cols() * 2);
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = p(r, c) * pj;
    }
    p = std::move(next);
  }
  return p;
}

Matrix to_complex(const Eigen::MatrixXd& m) { return m.cast<Complex>(); }

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

void HamiltonianSpec::validate() const {
  if (a.rows() == 0 || a.rows() != a.cols()) throw ShapeError("HamiltonianSpec: A must be square and non-empty");
  if (!is_hermitian(a)) throw ValidationError("HamiltonianSpec: A is not Hermitian");
  if (b) {
    if (b->rows() != a.rows() || b->cols() != a.cols()) throw ShapeError("HamiltonianSpec: B must match A");
    if (!is_hermitian(*b)) throw ValidationError("HamiltonianSpec: B is not Hermitian");
  }
  for (const auto& ch : channels) {
    if (ch.c.rows() != a.rows() || ch.c.cols() != a.cols()) {
      throw ShapeError("HamiltonianSpec: coupling operator must match A");
    }
    if (!ch.c.allFinite() || !std::isfinite(ch.phi)) throw ValidationError("HamiltonianSpec: non-finite channel");
  }
  if (channels.size() > 16) throw SizingError("HamiltonianSpec: too many channels");
}

std::string format_word(OutcomeWord w, int probes) {
  if (w == TrajectoryRecord::kNoOutcome) return "-";
  std::string s;
  for (int j = 0; j < probes; ++j) s.push_back(((w >> (probes - 1 - j)) & 1u) ? '1' : '0');
  return s;
}

double OutcomeDistribution::total_probability() const {
  double acc = 0.0;
  for (const auto& o : outcomes) acc += o.probability;
  return acc;
}

Matrix lifted_hamiltonian(const HamiltonianSpec& spec, double t, CouplingScaling scaling) {
  spec.validate();
  if (!(t > 0.0)) throw ValidationError("lifted_hamiltonian: step duration must be positive");
  const int k = spec.probes();
  const Index n = spec.dim();
  if ((n << k) > kDefaultMaxLiftedDim) throw SizingError("lifted_hamiltonian: lifted dimension too large");
  const Eigen::MatrixXd id = probe_identity(k);
  Matrix h;
  if (spec.b) {
    Eigen::MatrixXd vac = Eigen::MatrixXd::Zero(id.rows(), id.cols());
    vac(0, 0) = 1.0;
    h = kron(spec.a, to_complex(vac)) + kron(*spec.b, to_complex(id - vac));
  } else {
    h = kron(spec.a, to_complex(id));
  }
  const double g = scaling == CouplingScaling::kInverseSqrtStep ? 1.0 / std::sqrt(t) : 1.0;
  for (int j = 0; j < k; ++j) {
    const Matrix x = to_complex(raise_on_probe(k, j));
    const Matrix& c = spec.channels[j].c;
    h += g * (kI * kron(c, x) - kI * kron(c.adjoint(), x.transpose()));
  }
  return h;
}

ChainKernel::ChainKernel(HamiltonianSpec spec, double t, KernelMode mode, CouplingScaling scaling)
    : spec_(std::move(spec)), t_(t), mode_(mode) {
  spec_.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("ChainKernel: step duration must be positive");
  const int k = spec_.probes();
  const Index n = spec_.dim();
  const Index nwords = Index{1} << k;

  std::vector<ProjectorPair> pairs;
  for (const auto& ch : spec_.channels) pairs.push_back(projector_pair(ch.phi));
  for (Index w = 0; w < nwords; ++w) word_projectors_.push_back(word_projector(pairs, static_cast<OutcomeWord>(w)));

  if (mode_ == KernelMode::kExact) {
    const Matrix u = evolution_operator(lifted_hamiltonian(spec_, t_, scaling), t_);
    // Columns of the vacuum sector.
    Matrix v(u.rows(), n);
    for (Index a = 0; a < n; ++a) v.col(a) = u.col(a * nwords);
    for (Index w = 0; w < nwords; ++w) {
      const Eigen::MatrixXd& pw = word_projectors_[w];
      std::vector<Matrix> ops;
      for (Index out = 0; out < nwords; ++out) {
        Matrix kop = Matrix::Zero(n, n);
        for (Index in = 0; in < nwords; ++in) {
          if (pw(out, in) == 0.0) continue;
          for (Index a = 0; a < n; ++a) kop.row(a) += pw(out, in) * v.row(a * nwords + in);
        }
        if (!kop.isZero(0.0)) ops.push_back(std::move(kop));
      }
      Matrix eff = Matrix::Zero(n, n);
      for (const auto& kop : ops) eff += kop.adjoint() * kop;
      effects_.push_back(hermitian_part(eff));
      kraus_.push_back(std::move(ops));
    }
    return;
  }

  if (scaling != CouplingScaling::kInverseSqrtStep) {
    throw ValidationError("ChainKernel: the asymptotic kernel assumes the 1/sqrt(t) coupling scale");
  }
  // Orders 0, 1, 2 in s = sqrt(t) of the vacuum-column blocks V_u; -1 marks
  // a vanishing order, -2 the identity.
  std::vector<Block> blocks;
  auto add = [this](const Matrix& m) {
    pool_.push_back(m);
    pool_adjoint_.push_back(m.adjoint());
    return static_cast<int>(pool_.size()) - 1;
  };
  Matrix v0t = -kI * spec_.a;
  for (const auto& ch : spec_.channels) v0t -= 0.5 * ch.c.adjoint() * ch.c;
  blocks.push_back(Block{0, {-2, -1, add(v0t)}});
  for (int j = 0; j < k; ++j) {
    blocks.push_back(Block{OutcomeWord{1} << (k - 1 - j), {-1, add(spec_.channels[j].c), -1}});
  }
  for (int j = 0; j < k; ++j) {
    for (int l = j + 1; l < k; ++l) {
      const Matrix& cj = spec_.channels[j].c;
      const Matrix& cl = spec_.channels[l].c;
      const OutcomeWord u = (OutcomeWord{1} << (k - 1 - j)) | (OutcomeWord{1} << (k - 1 - l));
      blocks.push_back(Block{u, {-1, -1, add(0.5 * (cj * cl + cl * cj))}});
    }
  }
  const double s = std::sqrt(t_);
  const Matrix id = Matrix::Identity(n, n);
  auto op = [&](int idx) -> const Matrix& { return idx == -2 ? id : pool_[static_cast<std::size_t>(idx)]; };
  for (Index w = 0; w < nwords; ++w) {
    const Eigen::MatrixXd& pw = word_projectors_[w];
    std::vector<Term> terms;
    Matrix eff = Matrix::Zero(n, n);
    for (const auto& ba : blocks) {
      for (const auto& bb : blocks) {
        const double weight = pw(bb.probe, ba.probe);
        if (weight == 0.0) continue;
        for (int ka = 0; ka <= 2; ++ka) {
          if (ba.orders[ka] == -1) continue;
          for (int kb = 0; ka + kb <= 2; ++kb) {
            if (bb.orders[kb] == -1) continue;
            const double coef = weight * std::pow(s, ka + kb);
            terms.push_back(Term{coef, ba.orders[ka] == -2 ? -1 : ba.orders[ka], bb.orders[kb] == -2 ? -1 : bb.orders[kb]});
            // tr(V_a rho V_b^dagger) = tr(V_b^dagger V_a rho).
            eff += coef * op(bb.orders[kb]).adjoint() * op(ba.orders[ka]);
          }
        }
      }
    }
    effects_.push_back(hermitian_part(eff));
    terms_.push_back(std::move(terms));
  }
}

Matrix ChainKernel::unnormalized(const Matrix& rho, OutcomeWord w) const {
  if (rho.rows() != spec_.dim() || rho.cols() != spec_.dim()) throw ShapeError("ChainKernel: state dimension mismatch");
  if (w >= static_cast<OutcomeWord>(words())) throw RangeError("ChainKernel: outcome word out of range");
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  if (mode_ == KernelMode::kExact) {
    for (const auto& kop : kraus_[w]) out.noalias() += kop * rho * kop.adjoint();
    return out;
  }
  for (const auto& term : terms_[w]) {
    if (term.left < 0 && term.right < 0) {
      out += term.coef * rho;
    } else if (term.left < 0) {
      out.noalias() += term.coef * rho * pool_adjoint_[static_cast<std::size_t>(term.right)];
    } else if (term.right < 0) {
      out.noalias() += term.coef * pool_[static_cast<std::size_t>(term.left)] * rho;
    } else {
      out.noalias() += term.coef * pool_[static_cast<std::size_t>(term.left)] * rho *
                       pool_adjoint_[static_cast<std::size_t>(term.right)];
    }
  }
  return out;
}

Matrix ChainKernel::average(const Matrix& rho) const {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (int w = 0; w < words(); ++w) out += unnormalized(rho, static_cast<OutcomeWord>(w));
  return out;
}

std::vector<double> ChainKernel::probabilities(const Matrix& rho) const {
  std::vector<double> p(effects_.size());
  for (std::size_t w = 0; w < effects_.size(); ++w) {
    p[w] = effects_[w].transpose().cwiseProduct(rho).sum().real();
    if (mode_ == KernelMode::kAsymptotic && p[w] < -kNegativeProbabilityTol) {
      std::ostringstream os;
      os << "step_asymptotic: negative probability " << p[w] << " at t = " << t_ << "; reduce the step";
      throw StepSizeError(os.str());
    }
  }
  return p;
}

DensityMatrix ChainKernel::normalized(const Matrix& unnormalized, double p) const {
  Matrix m = hermitian_part(unnormalized) / p;
  m /= m.trace().real();
  // Exact kernels are completely positive; only tiny branches can lose
  // positivity to rounding. The asymptotic post-states are truncations.
  if (mode_ == KernelMode::kAsymptotic || p < 1e-6) {
    if (min_eigenvalue(m) < kMinEigenvalueTol) return clip_to_state(m);
  }
  return DensityMatrix::trusted(std::move(m));
}

OutcomeDistribution ChainKernel::step(const DensityMatrix& rho) const {
  const std::vector<double> p = probabilities(rho.matrix());
  double kept = 0.0;
  for (double x : p) {
    if (x >= kDropProbability) kept += x;
  }
  if (!(kept > 0.0)) throw NumericalError("ChainKernel: all outcome probabilities vanish");
  OutcomeDistribution dist;
  for (std::size_t w = 0; w < p.size(); ++w) {
    if (p[w] < kDropProbability) continue;
    const OutcomeWord word = static_cast<OutcomeWord>(w);
    dist.outcomes.push_back(Outcome{word, p[w] / kept, normalized(unnormalized(rho.matrix(), word), p[w])});
  }
  return dist;
}

Outcome ChainKernel::sample(const DensityMatrix& rho, double u) const {
  const std::vector<double> p = probabilities(rho.matrix());
  double kept = 0.0;
  for (double x : p) {
    if (x >= kDropProbability) kept += x;
  }
  if (!(kept > 0.0)) throw NumericalError("ChainKernel: all outcome probabilities vanish");
  double target = u * kept;
  std::size_t chosen = p.size();
  for (std::size_t w = 0; w < p.size(); ++w) {
    if (p[w] < kDropProbability) continue;
    chosen = w;
    if (target < p[w]) break;
    target -= p[w];
  }
  const OutcomeWord word = static_cast<OutcomeWord>(chosen);
  return Outcome{word, p[chosen] / kept, normalized(unnormalized(rho.matrix(), word), p[chosen])};
}

OutcomeDistribution step_exact(const DensityMatrix& rho, const HamiltonianSpec& spec, double t) {
  return ChainKernel(spec, t, KernelMode::kExact).step(rho);
}

OutcomeDistribution step_asymptotic(const DensityMatrix& rho, const HamiltonianSpec& spec, double t) {
  return ChainKernel(spec, t, KernelMode::kAsymptotic).step(rho);
}

double transition_operator(const ObservablePolynomial& f, const DensityMatrix& rho, const ChainKernel& kernel) {
  double acc = 0.0;
  for (const auto& o : kernel.step(rho).outcomes) acc += o.probability * f.value(o.state.matrix());
  return acc;
}

double transition_operator(const ObservablePolynomial& f, const DensityMatrix& rho, const HamiltonianSpec& spec,
                           double t) {
  return transition_operator(f, rho, ChainKernel(spec, t, KernelMode::kExact));
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::vector<long long>& k) const {
    std::size_t h = 1469598103934665603ull;
    for (long long x : k) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

std::vector<long long> quantize(const Matrix& m, double tol) {
  std::vector<long long> key;
  key.reserve(static_cast<std::size_t>(2 * m.size()));
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      key.push_back(std::llround(m(i, j).real() / tol));
      key.push_back(std::llround(m(i, j).imag() / tol));
    }
  }
  return key;
}

}  // namespace

double expected_after_steps(const ObservablePolynomial& f, const DensityMatrix& rho, const ChainKernel& kernel,
                            long steps, double merge_tol, std::size_t max_states) {
  if (steps < 0) throw ValidationError("expected_after_steps: negative step count");
  std::vector<std::pair<double, DensityMatrix>> cloud{{1.0, rho}};
  for (long n = 0; n < steps; ++n) {
    std::vector<std::pair<double, DensityMatrix>> next;
    std::unordered_map<std::vector<long long>, std::size_t, KeyHash> index;
    for (const auto& [weight, state] : cloud) {
      for (auto& o : kernel.step(state).outcomes) {
        auto key = quantize(o.state.matrix(), merge_tol);
        auto it = index.find(key);
        if (it != index.end()) {
          next[it->second].first += weight * o.probability;
        } else {
          index.emplace(std::move(key), next.size());
          next.emplace_back(weight * o.probability, std::move(o.state));
        }
      }
    }
    if (next.size() > max_states) throw SizingError("expected_after_steps: state cloud too large");
    cloud = std::move(next);
  }
  double acc = 0.0;
  for (const auto& [weight, state] : cloud) acc += weight * f.value(state.matrix());
  return acc;
}

const DensityMatrix& TrajectoryRecord::state_at(double s) const {
  if (times.empty()) throw RangeError("TrajectoryRecord: empty record");
  if (s < 0.0) throw RangeError("TrajectoryRecord: negative time");
  auto it = std::upper_bound(times.begin(), times.end(), s);
  return states[static_cast<std::size_t>(it - times.begin()) - 1];
}

std::string TrajectoryRecord::to_csv() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  const Index n = states.empty() ? 0 : states.front().dim();
  os << "step,time,outcome_word,wait";
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) os << ",re_" << i << j << ",im_" << i << j;
  }
  os << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    const std::size_t step = (k + 1 == times.size()) ? event_count : k;
    os << step << "," << times[k] << "," << format_word(outcomes[k], probes) << "," << waits[k];
    const Matrix& m = states[k].matrix();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) os << "," << m(i, j).real() << "," << m(i, j).imag();
    }
    os << "\n";
  }
  return os.str();
}

std::string TrajectoryRecord::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["probes"] = probes;
  j["events"] = event_count;
  j["times"] = times;
  j["waits"] = waits;
  nlohmann::json words = nlohmann::json::array();
  for (auto w : outcomes) words.push_back(format_word(w, probes));
  j["outcomes"] = words;
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : states) {
    const Matrix& m = s.matrix();
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      std::vector<double> rr, ii;
      for (Index c = 0; c < m.cols(); ++c) {
        rr.push_back(m(r, c).real());
        ii.push_back(m(r, c).imag());
      }
      re.push_back(rr);
      im.push_back(ii);
    }
    st.push_back({{"re", re}, {"im", im}});
  }
  j["states"] = st;
  return j.dump();
}

const Outcome& pick_outcome(const OutcomeDistribution& dist, double u) {
  if (dist.outcomes.empty()) throw NumericalError("pick_outcome: empty distribution");
  double target = u * dist.total_probability();
  for (const auto& o : dist.outcomes) {
    if (target < o.probability) return o;
    target -= o.probability;
  }
  return dist.outcomes.back();
}

TrajectoryRecord sample_trajectory(const DensityMatrix& rho0, const ChainKernel& kernel, const WaitingLaw& waiting,
                                   double horizon, std::uint64_t seed, const TrajectoryOptions& options) {
  if (!(horizon > 0.0)) throw ValidationError("sample_trajectory: horizon must be positive");
  waiting.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TrajectoryRecord rec;
  rec.probes = kernel.spec().probes();
  rec.seed = seed;
  rec.times.push_back(0.0);
  rec.states.push_back(rho0);
  rec.outcomes.push_back(TrajectoryRecord::kNoOutcome);
  rec.waits.push_back(0.0);
  // Relative slack so that a degenerate law with step h reaches horizon = m h.
  const double limit = horizon * (1.0 + 1e-12);
  double clock = 0.0;
  DensityMatrix state = rho0;
  for (;;) {
    if (options.max_events != 0 && rec.event_count >= options.max_events) break;
    const double tau = sample_waiting(waiting, rng);
    if (clock + tau > limit) break;
    const double next_clock = clock + tau;
    // A wait below the clock resolution cannot advance time.
    if (!(next_clock > clock)) continue;
    clock = next_clock;
    Outcome o = kernel.sample(state, unif(rng));
    state = std::move(o.state);
    ++rec.event_count;
    if (!options.endpoints_only) {
      rec.times.push_back(clock);
      rec.states.push_back(state);
      rec.outcomes.push_back(o.word);
      rec.waits.push_back(tau);
    } else if (rec.times.size() == 1) {
      rec.times.push_back(clock);
      rec.states.push_back(state);
      rec.outcomes.push_back(o.word);
      rec.waits.push_back(tau);
    } else {
      rec.times.back() = clock;
      rec.states.back() = state;
      rec.outcomes.back() = o.word;
      rec.waits.back() = tau;
    }
  }
  return rec;
}

TrajectoryRecord sample_trajectory(const DensityMatrix& rho0, const HamiltonianSpec& spec, double h,
                                   const WaitingLaw& waiting, double horizon, std::uint64_t seed,
                                   const TrajectoryOptions& options) {
  return sample_trajectory(rho0, ChainKernel(spec, h, options.mode), waiting, horizon, seed, options);
}

}  // namespace qfilter
