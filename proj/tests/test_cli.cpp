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

#include <cstdlib>
#include <filesystem>
#include <string>

#include "qfilter/config.hpp"
#include "qfilter/errors.hpp"
#include "qfilter/experiments.hpp"

using namespace qfilter;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QFILTER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment names") {
  for (auto k : all_experiments()) CHECK(parse_experiment(to_string(k)) == k);
  CHECK_THROWS_AS(parse_experiment("nope"), ConfigError);
  int criteria = 0;
  for (auto k : all_experiments()) criteria += criterion_of(k) > 0 ? 1 : 0;
  CHECK(criteria == 11);
}

TEST_CASE("defaults validate and round-trip") {
  for (auto k : all_experiments()) {
    const ExperimentConfig c = default_config(k);
    CHECK_NOTHROW(c.validate());
    const ExperimentConfig back = parse_config(c.to_json().dump(), "roundtrip");
    CHECK(back.to_json() == c.to_json());
  }
}

TEST_CASE("present keys override the defaults") {
  const ExperimentConfig c =
      parse_config(R"({"experiment": "caputo", "numeric": {"beta": [0.25], "seed": 7}, "output": {"formats": ["csv"]}})");
  CHECK(c.kind == ExperimentKind::kCaputo);
  REQUIRE(c.numeric.beta.size() == 1);
  CHECK(c.numeric.beta[0] == 0.25);
  CHECK(c.numeric.seed == 7);
  CHECK(c.numeric.delta == default_config(ExperimentKind::kCaputo).numeric.delta);
  CHECK(c.output.csv);
  CHECK_FALSE(c.output.json);
}

TEST_CASE("model and matrices") {
  const ExperimentConfig c = parse_config(R"({
    "experiment": "generator",
    "model": {"A": {"re": [[0, 1], [1, 0]]},
              "channels": [{"C": {"re": [[0, 0], [1, 0]]}, "phi": 0.5}]},
    "initial_state": {"re": [[0.5, 0], [0, 0.5]]}
  })");
  REQUIRE(c.model.channels.size() == 1);
  CHECK(c.model.channels[0].phi == 0.5);
  CHECK(c.model.a(0, 1) == Complex(1.0, 0.0));
  CHECK(c.initial_state(1, 1) == Complex(0.5, 0.0));
}

TEST_CASE("diagnostics") {
  CHECK(contains(error_of(R"({"experiment": "caputo", "bogus": 1})"), "config.bogus: unknown key"));
  CHECK(contains(error_of(R"({"experiment": "caputo", "numeric": {"hh": [1]}})"), "numeric.hh: unknown key"));
  CHECK(contains(error_of(R"({"numeric": {}})"), "config.experiment"));
  CHECK(contains(error_of(R"({"experiment": "warp"})"), "unknown name 'warp'"));
  CHECK(contains(error_of(R"({"experiment": "generator", "model": {"A": {"im": [[0]]}, "channels": []}})"),
                 "model.A.re: missing"));
  CHECK(contains(error_of(R"({"experiment": "generator", "initial_state": {"re": [[1, 0]]}})"), "initial_state"));
  CHECK(contains(error_of(R"({"experiment": "caputo", "numeric": {"n_paths": -3}})"), "numeric.n_paths"));
  CHECK(contains(error_of(R"({"experiment": "caputo", "numeric": {"dt": [0.1, -1]}})"), "numeric.dt[1]"));
  CHECK(contains(error_of(R"({"experiment": "caputo", "output": {"formats": ["xml"]}})"), "output.formats"));
  // Parse errors carry file, line and column.
  CHECK(contains(error_of("{\n  \"experiment\": \"caputo\",\n  oops\n}"), "cfg.json:3:3"));
  CHECK(contains(error_of("[1, 2]"), "top level"));
}

TEST_CASE("an experiment end to end") {
  ExperimentConfig c = default_config(ExperimentKind::kCaputo);
  const auto dir = std::filesystem::temp_directory_path() / "qfilter_test_cli";
  std::filesystem::remove_all(dir);
  c.output.dir = dir.string();
  const ExperimentResult r = run_experiment(c);
  CHECK(r.passed);
  CHECK(contains(r.line(), "PASS"));
  const auto written = write_artifacts(r, c);
  CHECK_FALSE(written.empty());
  for (const auto& p : written) CHECK(std::filesystem::exists(p));
  CHECK(std::filesystem::exists(dir / "caputo" / "summary.json"));
}

TEST_CASE("command line") {
  const auto dir = std::filesystem::temp_directory_path() / "qfilter_test_cli_bin";
  std::filesystem::remove_all(dir);
  CHECK(run_cli("--list") == 0);
  CHECK(run_cli("--experiment caputo --out " + dir.string()) == 0);
  CHECK(std::filesystem::exists(dir / "caputo" / "summary.json"));
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--experiment nope") == 1);
  CHECK(run_cli("--config /nonexistent/cfg.json") == 1);
  CHECK(run_cli("--threads 0 --experiment caputo") == 1);
}
