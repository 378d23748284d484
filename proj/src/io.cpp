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

#include "qfilter/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>

#include "qfilter/errors.hpp"

namespace qfilter {
namespace {

double number_at(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": expected a number");
  return j.get<double>();
}

const Json& require(const Json& j, const char* key, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(field + "." + key + ": missing");
  return *it;
}

std::vector<std::vector<double>> table_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field + ": expected a nonempty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw ConfigError(rf + ": expected an array");
    std::vector<double> row;
    for (std::size_t c = 0; c < j[r].size(); ++c) row.push_back(number_at(j[r][c], rf + "[" + std::to_string(c) + "]"));
    if (!rows.empty() && row.size() != rows.front().size()) throw ConfigError(rf + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.size() != rows.front().size()) {
    throw ConfigError(field + ": expected a square matrix, got " + std::to_string(rows.size()) + "x" +
                      std::to_string(rows.front().size()));
  }
  return rows;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw FormatError("CsvTable: empty header");
}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw FormatError("CsvTable: row width differs from the header");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json matrix_to_json(const Matrix& m) {
  Json re = Json::array();
  Json im = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array();
    Json ri = Json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return Json{{"re", re}, {"im", im}};
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field + ": expected {\"re\": [[...]], \"im\": [[...]]}");
  reject_unknown_keys(j, {"re", "im"}, field);
  const auto re = table_from_json(require(j, "re", field), field + ".re");
  const Index n = static_cast<Index>(re.size());
  Matrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) m(r, c) = Complex(re[r][c], 0.0);
  }
  if (j.contains("im")) {
    const auto im = table_from_json(j["im"], field + ".im");
    if (static_cast<Index>(im.size()) != n) {
      throw ConfigError(field + ".im: dimension " + std::to_string(im.size()) + " differs from re dimension " +
                        std::to_string(n));
    }
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < n; ++c) m(r, c) += Complex(0.0, im[r][c]);
    }
  }
  return m;
}

Json spec_to_json(const HamiltonianSpec& spec) {
  Json j;
  j["A"] = matrix_to_json(spec.a);
  if (spec.b) j["B"] = matrix_to_json(*spec.b);
  Json ch = Json::array();
  for (const auto& c : spec.channels) ch.push_back(Json{{"C", matrix_to_json(c.c)}, {"phi", c.phi}});
  j["channels"] = ch;
  return j;
}

HamiltonianSpec spec_from_json(const Json& j, const std::string& field) {
  reject_unknown_keys(j, {"A", "B", "channels"}, field);
  HamiltonianSpec spec;
  spec.a = matrix_from_json(require(j, "A", field), field + ".A");
  if (j.contains("B")) spec.b = matrix_from_json(j["B"], field + ".B");
  const Json& ch = require(j, "channels", field);
  if (!ch.is_array()) throw ConfigError(field + ".channels: expected an array");
  for (std::size_t k = 0; k < ch.size(); ++k) {
    const std::string cf = field + ".channels[" + std::to_string(k) + "]";
    reject_unknown_keys(ch[k], {"C", "phi"}, cf);
    ChannelSpec c;
    c.c = matrix_from_json(require(ch[k], "C", cf), cf + ".C");
    if (ch[k].contains("phi")) c.phi = number_at(ch[k]["phi"], cf + ".phi");
    if (c.c.rows() != spec.a.rows()) {
      throw ConfigError(cf + ".C: dimension " + std::to_string(c.c.rows()) + " differs from A dimension " +
                        std::to_string(spec.a.rows()));
    }
    spec.channels.push_back(std::move(c));
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(field + ": " + e.what());
  }
  return spec;
}

Json observable_to_json(const ObservablePolynomial& f) {
  Json basis = Json::array();
  for (const auto& b : f.basis()) basis.push_back(matrix_to_json(b));
  Json terms = Json::array();
  for (const auto& t : f.terms()) terms.push_back(Json{{"coefficient", t.coefficient}, {"powers", t.powers}});
  return Json{{"basis", basis}, {"terms", terms}};
}

ObservablePolynomial observable_from_json(const Json& j, const std::string& field) {
  reject_unknown_keys(j, {"basis", "terms"}, field);
  const Json& jb = require(j, "basis", field);
  const Json& jt = require(j, "terms", field);
  if (!jb.is_array()) throw ConfigError(field + ".basis: expected an array");
  if (!jt.is_array()) throw ConfigError(field + ".terms: expected an array");
  std::vector<Matrix> basis;
  for (std::size_t k = 0; k < jb.size(); ++k) basis.push_back(matrix_from_json(jb[k], field + ".basis[" + std::to_string(k) + "]"));
  std::vector<Monomial> terms;
  for (std::size_t k = 0; k < jt.size(); ++k) {
    const std::string tf = field + ".terms[" + std::to_string(k) + "]";
    reject_unknown_keys(jt[k], {"coefficient", "powers"}, tf);
    Monomial m;
    m.coefficient = number_at(require(jt[k], "coefficient", tf), tf + ".coefficient");
    const Json& jp = require(jt[k], "powers", tf);
    if (!jp.is_array()) throw ConfigError(tf + ".powers: expected an array");
    for (const auto& p : jp) {
      if (!p.is_number_integer()) throw ConfigError(tf + ".powers: expected integers");
      m.powers.push_back(p.get<int>());
    }
    terms.push_back(std::move(m));
  }
  try {
    return ObservablePolynomial(std::move(basis), std::move(terms));
  } catch (const Error& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(field + "." + key + ": unknown key");
    }
  }
}

}  // namespace qfilter
