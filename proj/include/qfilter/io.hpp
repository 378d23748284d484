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

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qfilter/chain.hpp"
#include "qfilter/observable.hpp"

namespace qfilter {

using Json = nlohmann::json;

/// Numeric CSV table. '.' decimal separator, 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Complex matrices are stored as {"re": [[...]], "im": [[...]]}; "im" may be
/// omitted for real matrices. `field` names the location in diagnostics.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& field);

/// Model block {"A", "B" (optional), "channels": [{"C", "phi"}]}.
Json spec_to_json(const HamiltonianSpec& spec);
HamiltonianSpec spec_from_json(const Json& j, const std::string& field);

/// {"basis": [matrix, ...], "terms": [{"coefficient", "powers"}]}.
Json observable_to_json(const ObservablePolynomial& f);
ObservablePolynomial observable_from_json(const Json& j, const std::string& field);

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& field);

}  // namespace qfilter
