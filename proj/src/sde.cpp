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

#include "qfilter/sde.hpp"

#include <cmath>
#include <locale>
#include <optional>
#include <sstream>

#include "qfilter/generators.hpp"

namespace qfilter {
namespace {

double pair_trace(const Matrix& x, const Matrix& y) { return x.transpose().cwiseProduct(y).sum().real(); }

double jump_intensity(const Matrix& rho, const Matrix& c) { return pair_trace(c.adjoint() * c, rho); }

Matrix rk4(const Matrix& rho, double dt, const auto& rhs) {
  const Matrix k1 = rhs(rho);
  const Matrix k2 = rhs(rho + 0.5 * dt * k1);
  const Matrix k3 = rhs(rho + 0.5 * dt * k2);
  const Matrix k4 = rhs(rho + dt * k3);
  return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

GeneratorSpec single_channel(const Matrix& a, const Matrix& c, bool counting) {
  GeneratorSpec spec;
  spec.a = a;
  spec.channels.push_back(ChannelSpec{c, counting ? 0.0 : M_PI / 4.0});
  return spec;
}

// Diffusive part of the continuous step for the Kraus scheme.
Matrix kraus_operator(const Matrix& rho, const GeneratorSpec& spec, double dt, const NoiseIncrement& noise) {
  const Index n = spec.dim();
  Matrix m = Matrix::Identity(n, n) - dt * kI * spec.a;
  for (const auto& ch : spec.channels) m -= 0.5 * dt * ch.c.adjoint() * ch.c;
  std::vector<std::size_t> dif;
  std::vector<double> dy(spec.channels.size(), 0.0);
  for (std::size_t j = 0; j < spec.channels.size(); ++j) {
    if (spec.channels[j].counting()) continue;
    dif.push_back(j);
    dy[j] = noise.dw[j] + omega_obs(rho, spec.channels[j].c) * dt;
    m += dy[j] * spec.channels[j].c;
  }
  for (std::size_t j : dif) {
    for (std::size_t k : dif) {
      const double q = dy[j] * dy[k] - (j == k ? dt : 0.0);
      m += 0.5 * q * spec.channels[j].c * spec.channels[k].c;
    }
  }
  return m;
}

void check_noise(const GeneratorSpec& spec, const NoiseIncrement& noise) {
  if (noise.dw.size() != spec.channels.size() || noise.uniform.size() != spec.channels.size()) {
    throw ShapeError("step_mixed: noise must carry one entry per channel");
  }
}

}  // namespace

std::string to_string(SdeScheme s) {
  switch (s) {
    case SdeScheme::kEulerMaruyama:
      return "euler-maruyama";
    case SdeScheme::kDriftRk4DiffusionEuler:
      return "drift-rk4+diffusion-euler";
    case SdeScheme::kKrausMap:
      return "kraus-map";
  }
  return "unknown";
}

SdeScheme parse_scheme(const std::string& name) {
  if (name == "euler-maruyama") return SdeScheme::kEulerMaruyama;
  if (name == "drift-rk4+diffusion-euler") return SdeScheme::kDriftRk4DiffusionEuler;
  if (name == "kraus-map") return SdeScheme::kKrausMap;
  throw ConfigError("unknown SDE scheme '" + name + "'");
}

void SdeConfig::validate() const {
  spec.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("SdeConfig: dt must be positive");
}

NoiseIncrement draw_noise(const GeneratorSpec& spec, double dt, std::mt19937_64& rng) {
  NoiseIncrement noise;
  noise.dw.assign(spec.channels.size(), 0.0);
  noise.uniform.assign(spec.channels.size(), 0.0);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t j = 0; j < spec.channels.size(); ++j) {
    if (spec.channels[j].counting()) {
      noise.uniform[j] = unif(rng);
    } else {
      noise.dw[j] = gauss(rng);
    }
  }
  return noise;
}

Matrix counting_drift(const Matrix& rho, const Matrix& a, const Matrix& c) {
  const Matrix ctc = c.adjoint() * c;
  return -kI * commutator(a, rho) - 0.5 * anticommutator(ctc, rho) + pair_trace(ctc, rho) * rho;
}

Matrix diffusive_drift(const Matrix& rho, const Matrix& a, const Matrix& c) {
  return -kI * commutator(a, rho) - 0.5 * anticommutator(c.adjoint() * c, rho) + c * rho * c.adjoint();
}

double omega_obs(const Matrix& rho, const Matrix& c) { return 2.0 * (c * rho).trace().real(); }

Matrix diffusion_coefficient(const Matrix& rho, const Matrix& c) {
  const Matrix b = rho * c.adjoint() + c * rho;
  return b - b.trace().real() * rho;
}

Matrix mixed_drift(const Matrix& rho, const GeneratorSpec& spec) {
  Matrix out = -kI * commutator(spec.a, rho);
  for (const auto& ch : spec.channels) {
    const Matrix ctc = ch.c.adjoint() * ch.c;
    out -= 0.5 * anticommutator(ctc, rho);
    if (ch.counting()) {
      out += pair_trace(ctc, rho) * rho;
    } else {
      out += ch.c * rho * ch.c.adjoint();
    }
  }
  return out;
}

DensityMatrix project_to_state(const Matrix& m) {
  if (density_matrix_violation(m).empty()) return DensityMatrix::trusted(m);
  return clip_to_state(m);
}

Matrix step_mixed_raw(const Matrix& rho, const GeneratorSpec& spec, double dt, const NoiseIncrement& noise,
                      SdeScheme scheme) {
  check_noise(spec, noise);
  for (std::size_t j = 0; j < spec.channels.size(); ++j) {
    const auto& ch = spec.channels[j];
    if (!ch.counting()) continue;
    const double intensity = jump_intensity(rho, ch.c);
    if (dt * intensity >= 1.0) {
      std::ostringstream os;
      os << "counting step: dt * intensity = " << dt * intensity << " >= 1; reduce dt";
      throw StepSizeError(os.str());
    }
    // Thinning; no jump when the intensity vanishes.
    if (intensity >= kMinJumpIntensity && noise.uniform[j] < dt * intensity) {
      return ch.c * rho * ch.c.adjoint() / intensity;
    }
  }
  switch (scheme) {
    case SdeScheme::kEulerMaruyama:
    case SdeScheme::kDriftRk4DiffusionEuler: {
      Matrix next = scheme == SdeScheme::kEulerMaruyama
                        ? Matrix(rho + dt * mixed_drift(rho, spec))
                        : rk4(rho, dt, [&spec](const Matrix& x) { return mixed_drift(x, spec); });
      for (std::size_t j = 0; j < spec.channels.size(); ++j) {
        if (!spec.channels[j].counting()) next += diffusion_coefficient(rho, spec.channels[j].c) * noise.dw[j];
      }
      return next;
    }
    case SdeScheme::kKrausMap: {
      const Matrix m = kraus_operator(rho, spec, dt, noise);
      const Matrix next = m * rho * m.adjoint();
      const double tr = next.trace().real();
      if (!(tr > 0.0) || !std::isfinite(tr)) throw DegenerateStateError("Kraus step: state trace vanished");
      return next / tr;
    }
  }
  return rho;
}

DensityMatrix step_mixed(const DensityMatrix& rho, const GeneratorSpec& spec, double dt,
                         const NoiseIncrement& noise, SdeScheme scheme) {
  return project_to_state(step_mixed_raw(rho.matrix(), spec, dt, noise, scheme));
}

Matrix step_counting_raw(const Matrix& rho, const Matrix& a, const Matrix& c, double dt, double u,
                         SdeScheme scheme) {
  NoiseIncrement noise{{0.0}, {u}};
  return step_mixed_raw(rho, single_channel(a, c, true), dt, noise, scheme);
}

DensityMatrix step_counting(const DensityMatrix& rho, const Matrix& a, const Matrix& c, double dt,
                            std::mt19937_64& rng, SdeScheme scheme) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return project_to_state(step_counting_raw(rho.matrix(), a, c, dt, u, scheme));
}

Matrix step_diffusive_raw(const Matrix& rho, const Matrix& a, const Matrix& c, double dt, double dw,
                          SdeScheme scheme) {
  NoiseIncrement noise{{dw}, {0.0}};
  return step_mixed_raw(rho, single_channel(a, c, false), dt, noise, scheme);
}

DensityMatrix step_diffusive(const DensityMatrix& rho, const Matrix& a, const Matrix& c, double dt, double dw,
                             SdeScheme scheme) {
  return project_to_state(step_diffusive_raw(rho.matrix(), a, c, dt, dw, scheme));
}

PureState step_pure(const PureState& psi, const Matrix& a, const Matrix& c, double dt, double dw) {
  const Vector& v = psi.vector();
  if (a.rows() != v.size() || c.rows() != v.size()) throw ShapeError("step_pure: dimension mismatch");
  const double r = v.dot(c * v).real();  // Re (phi, C phi); dot conjugates the left factor
  const Index n = v.size();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix drift = -kI * a - 0.5 * c.adjoint() * c + r * c - 0.5 * r * r * id;
  const Vector next = v + dt * (drift * v) + dw * ((c - r * id) * v);
  const double norm = next.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateStateError("step_pure: vector norm vanished");
  return PureState::trusted(next / norm);
}

LinearStep step_linear(const Matrix& xi, const Matrix& a, const Matrix& c, double dt, double dy, bool milstein) {
  const double tr = xi.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw IntegrationFailure("step_linear: tr xi is not positive");
  const Matrix g = xi * c.adjoint() + c * xi;
  const double dw = dy - g.trace().real() / tr * dt;
  Matrix next = xi + dt * diffusive_drift(xi, a, c) + dy * g;
  if (milstein) {
    const Matrix gg = g * c.adjoint() + c * g;
    next += 0.5 * (dy * dy - dt) * gg;
  }
  const double tr_next = next.trace().real();
  if (!(tr_next > 0.0) || !std::isfinite(tr_next)) throw IntegrationFailure("step_linear: tr xi is not positive");
  Matrix rho = 0.5 * (next + next.adjoint()) / tr_next;
  return LinearStep{next, project_to_state(rho), dw};
}

SdeIntegrator::SdeIntegrator(SdeConfig config) : config_(std::move(config)) { config_.validate(); }

Matrix SdeIntegrator::finish(Matrix m) const {
  if (config_.projection) return project_to_state(m).matrix();
  if (!m.allFinite()) throw IntegrationFailure("SDE step produced non-finite entries");
  return m;
}

Matrix SdeIntegrator::step(const Matrix& rho, const NoiseIncrement& noise, double dt) const {
  return finish(step_mixed_raw(rho, config_.spec, dt, noise, config_.scheme));
}

Matrix SdeIntegrator::step(const Matrix& rho, std::mt19937_64& rng) const {
  return step(rho, draw_noise(config_.spec, config_.dt, rng), config_.dt);
}

Matrix SdeIntegrator::evolve(const Matrix& rho0, double s, std::mt19937_64& rng) const {
  return evolve_to(rho0, {s}, rng).front();
}

std::vector<Matrix> SdeIntegrator::evolve_to(const Matrix& rho0, const std::vector<double>& checkpoints,
                                             std::mt19937_64& rng) const {
  std::vector<Matrix> out;
  out.reserve(checkpoints.size());
  Matrix rho = rho0;
  const double dt = config_.dt;
  long done = 0;        // full steps taken on the grid k dt
  double clock = 0.0;   // current time, possibly off grid after a short step
  for (double target : checkpoints) {
    if (target < clock - 1e-12 * std::max(1.0, clock)) throw RangeError("evolve_to: checkpoints must be nondecreasing");
    // Full steps while the next grid point does not pass the target.
    const long last = static_cast<long>(std::floor(target / dt * (1.0 + 1e-12)));
    while (done < last) {
      const double next = static_cast<double>(done + 1) * dt;
      const double h = next - clock;
      rho = step(rho, draw_noise(config_.spec, h, rng), h);
      clock = next;
      ++done;
    }
    const double rem = target - clock;
    if (rem > 1e-12 * dt) {
      rho = step(rho, draw_noise(config_.spec, rem, rng), rem);
      clock = target;
    }
    out.push_back(rho);
  }
  return out;
}

std::string EnsembleResult::to_csv() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "t,observable,mean,stderr,n_paths\n";
  for (const auto& p : points) {
    os << p.t << "," << p.observable << "," << p.mean << "," << p.std_error << "," << p.paths << "\n";
  }
  return os.str();
}

EnsembleResult ensemble_mean(const SdeIntegrator& integrator, const DensityMatrix& rho0,
                             const std::vector<Matrix>& observables, const std::vector<double>& checkpoints,
                             std::size_t n_paths, std::uint64_t base_seed, Execution exec) {
  using Sample = std::optional<std::vector<double>>;
  const std::size_t nb = observables.size();
  const auto samples = map_paths<Sample>(
      n_paths,
      [&](std::size_t i) -> Sample {
        std::mt19937_64 rng(base_seed + i);
        try {
          const auto states = integrator.evolve_to(rho0.matrix(), checkpoints, rng);
          std::vector<double> v;
          v.reserve(states.size() * nb);
          for (const auto& s : states) {
            for (const auto& b : observables) v.push_back(pair_trace(b, s));
          }
          return v;
        } catch (const IntegrationFailure&) {
          return std::nullopt;
        } catch (const DegenerateStateError&) {
          return std::nullopt;
        }
      },
      exec);
  EnsembleResult result;
  std::vector<double> sum(checkpoints.size() * nb, 0.0);
  std::vector<double> sq(checkpoints.size() * nb, 0.0);
  std::size_t good = 0;
  for (const auto& s : samples) {
    if (!s) {
      ++result.failed_paths;
      continue;
    }
    ++good;
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += (*s)[k];
      sq[k] += (*s)[k] * (*s)[k];
    }
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t k = c * nb + b;
      EnsemblePoint p;
      p.t = checkpoints[c];
      p.observable = b;
      p.paths = good;
      if (good > 0) {
        p.mean = sum[k] / static_cast<double>(good);
        const double var = good > 1 ? std::max(0.0, (sq[k] - good * p.mean * p.mean) / static_cast<double>(good - 1)) : 0.0;
        p.std_error = std::sqrt(var / static_cast<double>(good));
      }
      result.points.push_back(p);
    }
  }
  return result;
}

Matrix counting_drift_rk4_step(const Matrix& rho, const GeneratorSpec& spec, double dt) {
  auto rhs = [&spec](const Matrix& x) {
    Matrix out = -kI * commutator(spec.a, x);
    for (const auto& ch : spec.channels) {
      const Matrix ctc = ch.c.adjoint() * ch.c;
      out += -0.5 * anticommutator(ctc, x) + pair_trace(ctc, x) * x;
    }
    return out;
  };
  return rk4(rho, dt, rhs);
}

double drift_flow_min_eigenvalue(const Matrix& rho0, const GeneratorSpec& spec, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ValidationError("drift_flow_min_eigenvalue: dt and horizon must be positive");
  Matrix rho = rho0;
  double worst = min_eigenvalue(rho);
  const long steps = std::lround(horizon / dt);
  for (long k = 0; k < steps; ++k) {
    rho = counting_drift_rk4_step(rho, spec, dt);
    worst = std::min(worst, min_eigenvalue(rho));
  }
  return worst;
}

}  // namespace qfilter
