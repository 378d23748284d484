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

#include "qfilter/config.hpp"

#include <algorithm>
#include <cmath>

#include "qfilter/errors.hpp"

namespace qfilter {
namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
  int criterion;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::kConverge, "converge", 1},
    {ExperimentKind::kGenerator, "generator", 2},
    {ExperimentKind::kPhiIndependence, "phi-independence", 3},
    {ExperimentKind::kSdeEnsemble, "sde-ensemble", 4},
    {ExperimentKind::kPurity, "purity", 5},
    {ExperimentKind::kEquivalence, "equivalence", 6},
    {ExperimentKind::kCtrwLimit, "ctrw-limit", 7},
    {ExperimentKind::kFractional, "fractional", 8},
    {ExperimentKind::kCaputo, "caputo", 9},
    {ExperimentKind::kPositivity, "positivity", 10},
    {ExperimentKind::kControl, "control", 11},
    {ExperimentKind::kZeno, "zeno", 0},
    {ExperimentKind::kHjb, "hjb", 0},
};

HamiltonianSpec qubit_model(double a, double phi) {
  HamiltonianSpec s;
  s.a = a * pauli_x();
  s.channels = {{transition_0_to_1(), phi}};
  return s;
}

// z^2 + 0.5 z x + x with z = tr(sigma_z rho), x = tr(sigma_x rho).
ObservablePolynomial quadratic_observable() {
  return ObservablePolynomial({pauli_z(), pauli_x()}, {{1.0, {2, 0}}, {0.5, {1, 1}}, {1.0, {0, 1}}});
}

std::vector<double> dyadic(int from, int to) {
  std::vector<double> h;
  for (int k = from; k <= to; ++k) h.push_back(std::ldexp(1.0, -k));
  return h;
}

std::vector<double> numbers(const Json& j, const std::string& field) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
    return out;
  }
  if (!j.is_array()) throw ConfigError(field + ": expected a number or an array of numbers");
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(field + "[" + std::to_string(k) + "]: expected a number");
    out.push_back(j[k].get<double>());
  }
  return out;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": expected a number");
  return j.get<double>();
}

std::size_t count(const Json& j, const std::string& field) {
  if (!j.is_number_unsigned()) throw ConfigError(field + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

bool flag(const Json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field + ": expected true or false");
  return j.get<bool>();
}

void require_positive(const std::vector<double>& v, const std::string& field) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] > 0.0) || !std::isfinite(v[k])) {
      throw ConfigError(field + "[" + std::to_string(k) + "]: expected a positive number");
    }
  }
}

Json matrix_or_null(const Matrix& m) { return m.size() ? matrix_to_json(m) : Json(); }

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& e : kKinds) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (const auto& e : kKinds) {
    if (name == e.name) return e.kind;
  }
  std::string known;
  for (const auto& e : kKinds) known += std::string(known.empty() ? "" : ", ") + e.name;
  throw ConfigError("experiment: unknown name '" + name + "' (known: " + known + ")");
}

std::vector<ExperimentKind> all_experiments() {
  std::vector<ExperimentKind> out;
  for (const auto& e : kKinds) out.push_back(e.kind);
  return out;
}

int criterion_of(ExperimentKind k) {
  for (const auto& e : kKinds) {
    if (e.kind == k) return e.criterion;
  }
  return 0;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.model = qubit_model(0.5, 0.0);
  c.initial_state = DensityMatrix::basis(2, 0).matrix();
  NumericBlock& n = c.numeric;
  switch (kind) {
    case ExperimentKind::kConverge:
      c.observable = quadratic_observable();
      n.h = dyadic(6, 12);
      n.s = 0.5;
      n.probes = 20;
      break;
    case ExperimentKind::kGenerator:
      c.observable = quadratic_observable();
      n.h = dyadic(6, 12);
      n.phi = {0.0, M_PI / 4.0};
      break;
    case ExperimentKind::kPhiIndependence:
      c.observable = quadratic_observable();
      n.h = dyadic(6, 12);
      n.phi = {M_PI / 6.0, M_PI / 4.0};
      break;
    case ExperimentKind::kSdeEnsemble:
      c.model = qubit_model(1.0, 0.0);
      n.phi = {0.0, M_PI / 4.0};
      n.dt = {1e-3};
      n.n_paths = 10000;
      n.horizon = 1.0;
      n.checkpoints = 10;
      n.seed = 100000;
      break;
    case ExperimentKind::kPurity:
      c.model = qubit_model(1.0, M_PI / 4.0);
      n.dt = {1e-3, 1e-4};
      n.n_paths = 100;
      n.horizon = 1.0;
      n.seed = 200000;
      break;
    case ExperimentKind::kEquivalence:
      c.model = qubit_model(1.0, M_PI / 4.0);
      n.dt = {1e-2, 1e-3, 1e-4};
      n.n_paths = 20;
      n.horizon = 1.0;
      n.seed = 300000;
      break;
    case ExperimentKind::kCtrwLimit:
      c.model = qubit_model(1.0, 0.0);
      c.observable = ObservablePolynomial::linear(pauli_z());
      n.h = {1e-1, 1e-2, 1e-3};
      n.beta = {0.7};
      n.dt = {1e-3};
      n.n_paths = 10000;
      n.horizon = 1.0;
      n.seed = 1;
      break;
    case ExperimentKind::kFractional:
      c.model = qubit_model(1.0, 0.0);
      c.observable = ObservablePolynomial::linear(pauli_z());
      n.beta = {0.7, 0.99};
      n.dt = {1e-3};
      n.delta = 0.05;
      n.n_paths = 10000;
      n.horizon = 1.0;
      n.seed = 500000;
      break;
    case ExperimentKind::kCaputo:
      n.beta = {0.5};
      n.delta = 1e-3;
      n.horizon = 1.0;
      break;
    case ExperimentKind::kPositivity:
      n.dt = {1e-3, 5e-4};
      n.probes = 50;
      n.horizon = 1.0;
      n.seed = 600000;
      break;
    case ExperimentKind::kControl:
    case ExperimentKind::kHjb:
      c.model = qubit_model(1.0, 0.0);
      n.h = {0.05};
      n.horizon = 1.0;
      n.n_paths = 10000;
      n.seed = 700000;
      c.control.h1 = pauli_z();
      c.control.h2 = pauli_y();
      c.control.running_cost = 0.5 * pauli_z();
      c.control.terminal_cost = pauli_z();
      c.control.u = {-1.0, 0.0, 1.0};
      c.control.v = {-0.5, 0.0, 0.5};
      c.control.u_subset = {0.0, 1.0};
      if (kind == ExperimentKind::kHjb) {
        c.control.v = {0.0};
        c.control.u_subset = {0.0};
        c.control.mesh_points = 11;
        c.control.markov = false;
        n.beta = {0.7};
        n.delta = 0.1;
      }
      break;
    case ExperimentKind::kZeno:
      c.model = qubit_model(1.0, 0.0);
      c.observable = ObservablePolynomial::linear(pauli_z());
      n.h = {1e-2, 1e-3, 1e-4};
      n.s = 1.0;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (model.channels.empty()) throw ConfigError("model.channels: at least one channel is required");
  const Index d = model.dim();
  if (observable && observable->dim() != 0 && observable->dim() != d) {
    throw ConfigError("observable: basis dimension differs from the model dimension");
  }
  if (initial_state.rows() != d || initial_state.cols() != d) {
    throw ConfigError("initial_state: dimension differs from the model dimension");
  }
  if (!density_matrix_violation(initial_state).empty()) {
    throw ConfigError("initial_state: not a density matrix");
  }
  require_positive(numeric.h, "numeric.h");
  require_positive(numeric.dt, "numeric.dt");
  for (std::size_t k = 0; k < numeric.beta.size(); ++k) {
    if (!(numeric.beta[k] > 0.0 && numeric.beta[k] <= 1.0)) {
      throw ConfigError("numeric.beta[" + std::to_string(k) + "]: expected a value in (0, 1]");
    }
  }
  if (!(numeric.horizon > 0.0)) throw ConfigError("numeric.horizon: expected a positive number");
  if (!(numeric.s > 0.0)) throw ConfigError("numeric.s: expected a positive number");
  if (!(numeric.delta > 0.0)) throw ConfigError("numeric.delta: expected a positive number");
  auto need = [&](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string(field) + ": " + what + " for experiment " + to_string(kind));
  };
  switch (kind) {
    case ExperimentKind::kConverge:
    case ExperimentKind::kGenerator:
    case ExperimentKind::kPhiIndependence:
      need(observable.has_value(), "observable", "required");
      need(numeric.h.size() >= 2, "numeric.h", "at least two steps are required");
      if (kind != ExperimentKind::kConverge) need(!numeric.phi.empty(), "numeric.phi", "required");
      if (kind == ExperimentKind::kPhiIndependence) need(numeric.phi.size() == 2, "numeric.phi", "exactly two angles");
      break;
    case ExperimentKind::kSdeEnsemble:
      need(!numeric.phi.empty(), "numeric.phi", "required");
      need(!numeric.dt.empty(), "numeric.dt", "required");
      need(numeric.n_paths >= 2, "numeric.n_paths", "at least two paths");
      need(numeric.checkpoints >= 1, "numeric.checkpoints", "at least one checkpoint");
      break;
    case ExperimentKind::kPurity:
    case ExperimentKind::kEquivalence:
      need(numeric.dt.size() >= 2, "numeric.dt", "at least two steps are required");
      need(numeric.n_paths >= 1, "numeric.n_paths", "at least one path");
      for (const auto& ch : model.channels) need(!ch.counting(), "model.channels", "diffusive channels (phi != 0)");
      if (kind == ExperimentKind::kEquivalence) need(model.channels.size() == 1, "model.channels", "exactly one channel");
      break;
    case ExperimentKind::kCtrwLimit:
    case ExperimentKind::kFractional:
      need(observable.has_value(), "observable", "required");
      need(!numeric.beta.empty(), "numeric.beta", "required");
      need(!numeric.dt.empty(), "numeric.dt", "required");
      need(numeric.n_paths >= 2, "numeric.n_paths", "at least two paths");
      if (kind == ExperimentKind::kCtrwLimit) need(numeric.h.size() >= 2, "numeric.h", "at least two steps");
      break;
    case ExperimentKind::kCaputo:
      need(!numeric.beta.empty(), "numeric.beta", "required");
      break;
    case ExperimentKind::kPositivity:
      need(numeric.dt.size() >= 2, "numeric.dt", "at least two steps are required");
      for (const auto& ch : model.channels) need(ch.counting(), "model.channels", "counting channels (phi = 0)");
      break;
    case ExperimentKind::kControl:
    case ExperimentKind::kHjb: {
      need(d == 2, "model.A", "a qubit model");
      need(!numeric.h.empty(), "numeric.h", "required");
      need(!control.u.empty(), "control.U", "nonempty");
      need(!control.v.empty(), "control.V", "nonempty");
      need(control.mesh_points >= 3, "control.mesh_points", "at least 3");
      for (const Matrix* m : {&control.h1, &control.h2, &control.running_cost, &control.terminal_cost}) {
        need(m->rows() == d && m->cols() == d, "control", "operators of the model dimension");
        need(is_hermitian(*m), "control", "Hermitian operators");
      }
      for (double u : control.u_subset) {
        need(std::find(control.u.begin(), control.u.end(), u) != control.u.end(), "control.U_subset",
             "a subset of control.U");
      }
      if (kind == ExperimentKind::kHjb || !control.markov) need(!numeric.beta.empty(), "numeric.beta", "required");
      break;
    }
    case ExperimentKind::kZeno:
      need(observable.has_value(), "observable", "required");
      need(numeric.h.size() >= 2, "numeric.h", "at least two steps");
      break;
  }
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["experiment"] = to_string(kind);
  j["model"] = spec_to_json(model);
  if (observable) j["observable"] = observable_to_json(*observable);
  j["initial_state"] = matrix_to_json(initial_state);
  j["numeric"] = Json{{"h", numeric.h},
                      {"dt", numeric.dt},
                      {"beta", numeric.beta},
                      {"phi", numeric.phi},
                      {"n_paths", numeric.n_paths},
                      {"horizon", numeric.horizon},
                      {"s", numeric.s},
                      {"delta", numeric.delta},
                      {"probes", numeric.probes},
                      {"checkpoints", numeric.checkpoints},
                      {"seed", numeric.seed}};
  j["control"] = Json{{"H1", matrix_or_null(control.h1)},
                      {"H2", matrix_or_null(control.h2)},
                      {"J", matrix_or_null(control.running_cost)},
                      {"F", matrix_or_null(control.terminal_cost)},
                      {"U", control.u},
                      {"V", control.v},
                      {"U_subset", control.u_subset},
                      {"mesh_points", control.mesh_points},
                      {"markov", control.markov}};
  j["output"] = Json{{"dir", output.dir}, {"formats", Json::array()}};
  if (output.csv) j["output"]["formats"].push_back("csv");
  if (output.json) j["output"]["formats"].push_back("json");
  return j;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
  reject_unknown_keys(j, {"experiment", "model", "observable", "initial_state", "numeric", "control", "output"},
                      "config");
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    throw ConfigError("config.experiment: missing or not a string");
  }
  ExperimentConfig c = default_config(parse_experiment(j["experiment"].get<std::string>()));
  if (j.contains("model")) c.model = spec_from_json(j["model"], "model");
  if (j.contains("observable")) c.observable = observable_from_json(j["observable"], "observable");
  if (j.contains("initial_state")) c.initial_state = matrix_from_json(j["initial_state"], "initial_state");
  if (j.contains("numeric")) {
    const Json& n = j["numeric"];
    reject_unknown_keys(n, {"h", "dt", "beta", "phi", "n_paths", "horizon", "s", "delta", "probes", "checkpoints", "seed"},
                        "numeric");
    if (n.contains("h")) c.numeric.h = numbers(n["h"], "numeric.h");
    if (n.contains("dt")) c.numeric.dt = numbers(n["dt"], "numeric.dt");
    if (n.contains("beta")) c.numeric.beta = numbers(n["beta"], "numeric.beta");
    if (n.contains("phi")) c.numeric.phi = numbers(n["phi"], "numeric.phi");
    if (n.contains("n_paths")) c.numeric.n_paths = count(n["n_paths"], "numeric.n_paths");
    if (n.contains("horizon")) c.numeric.horizon = number(n["horizon"], "numeric.horizon");
    if (n.contains("s")) c.numeric.s = number(n["s"], "numeric.s");
    if (n.contains("delta")) c.numeric.delta = number(n["delta"], "numeric.delta");
    if (n.contains("probes")) c.numeric.probes = count(n["probes"], "numeric.probes");
    if (n.contains("checkpoints")) c.numeric.checkpoints = count(n["checkpoints"], "numeric.checkpoints");
    if (n.contains("seed")) c.numeric.seed = count(n["seed"], "numeric.seed");
  }
  if (j.contains("control")) {
    const Json& k = j["control"];
    reject_unknown_keys(k, {"H1", "H2", "J", "F", "U", "V", "U_subset", "mesh_points", "markov"}, "control");
    if (k.contains("H1") && !k["H1"].is_null()) c.control.h1 = matrix_from_json(k["H1"], "control.H1");
    if (k.contains("H2") && !k["H2"].is_null()) c.control.h2 = matrix_from_json(k["H2"], "control.H2");
    if (k.contains("J") && !k["J"].is_null()) c.control.running_cost = matrix_from_json(k["J"], "control.J");
    if (k.contains("F") && !k["F"].is_null()) c.control.terminal_cost = matrix_from_json(k["F"], "control.F");
    if (k.contains("U")) c.control.u = numbers(k["U"], "control.U");
    if (k.contains("V")) c.control.v = numbers(k["V"], "control.V");
    if (k.contains("U_subset")) c.control.u_subset = numbers(k["U_subset"], "control.U_subset");
    if (k.contains("mesh_points")) c.control.mesh_points = static_cast<int>(count(k["mesh_points"], "control.mesh_points"));
    if (k.contains("markov")) c.control.markov = flag(k["markov"], "control.markov");
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    reject_unknown_keys(o, {"dir", "formats"}, "output");
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("output.dir: expected a string");
      c.output.dir = o["dir"].get<std::string>();
    }
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) throw ConfigError("output.formats: expected an array");
      c.output.csv = false;
      c.output.json = false;
      for (const auto& f : o["formats"]) {
        const std::string name = f.is_string() ? f.get<std::string>() : "";
        if (name == "csv") {
          c.output.csv = true;
        } else if (name == "json") {
          c.output.json = true;
        } else {
          throw ConfigError("output.formats: expected \"csv\" or \"json\"");
        }
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

}  // namespace qfilter
