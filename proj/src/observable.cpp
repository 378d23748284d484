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

#include "qfilter/observable.hpp"

#include <cmath>

namespace qfilter {
namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

}  // namespace

ObservablePolynomial::ObservablePolynomial(std::vector<Matrix> basis, std::vector<Monomial> terms)
    : basis_(std::move(basis)), terms_(std::move(terms)) {
  for (const auto& b : basis_) {
    if (b.rows() != b.cols() || b.rows() != basis_.front().rows()) {
      throw ShapeError("ObservablePolynomial: basis operators must be square and of equal size");
    }
    if (!is_hermitian(b)) throw ValidationError("ObservablePolynomial: basis operator is not Hermitian");
  }
  for (const auto& t : terms_) {
    if (t.powers.size() != basis_.size()) {
      throw ShapeError("ObservablePolynomial: monomial arity differs from basis size");
    }
    int deg = 0;
    for (int p : t.powers) {
      if (p < 0) throw ValidationError("ObservablePolynomial: negative power");
      deg += p;
    }
    if (deg > kMaxDegree) throw ValidationError("ObservablePolynomial: degree exceeds 3");
    if (t.coefficient != 0.0) degree_ = std::max(degree_, deg);
  }
}

ObservablePolynomial ObservablePolynomial::constant(double c) {
  return ObservablePolynomial({}, {Monomial{c, {}}});
}

ObservablePolynomial ObservablePolynomial::linear(const Matrix& b) {
  return ObservablePolynomial({b}, {Monomial{1.0, {1}}});
}

ObservablePolynomial ObservablePolynomial::square(const Matrix& b) {
  return ObservablePolynomial({b}, {Monomial{1.0, {2}}});
}

ObservablePolynomial ObservablePolynomial::product(const Matrix& b1, const Matrix& b2) {
  return ObservablePolynomial({b1, b2}, {Monomial{1.0, {1, 1}}});
}

std::vector<double> ObservablePolynomial::coordinates(const Matrix& x) const {
  std::vector<double> z(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    if (x.rows() != basis_[i].rows()) throw ShapeError("ObservablePolynomial: state dimension mismatch");
    // tr(B X) without forming the product.
    z[i] = basis_[i].transpose().cwiseProduct(x).sum().real();
  }
  return z;
}

double ObservablePolynomial::poly(const std::vector<double>& z) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    double m = t.coefficient;
    for (std::size_t i = 0; i < z.size(); ++i) m *= ipow(z[i], t.powers[i]);
    acc += m;
  }
  return acc;
}

double ObservablePolynomial::partial(const std::vector<double>& z, std::size_t i) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    if (t.powers[i] == 0) continue;
    double m = t.coefficient * t.powers[i] * ipow(z[i], t.powers[i] - 1);
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k != i) m *= ipow(z[k], t.powers[k]);
    }
    acc += m;
  }
  return acc;
}

double ObservablePolynomial::second_partial(const std::vector<double>& z, std::size_t i,
                                            std::size_t j) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    std::vector<int> p = t.powers;
    double m = t.coefficient;
    m *= p[i];
    if (m == 0.0) continue;
    p[i] -= 1;
    m *= p[j];
    if (m == 0.0) continue;
    p[j] -= 1;
    for (std::size_t k = 0; k < z.size(); ++k) m *= ipow(z[k], p[k]);
    acc += m;
  }
  return acc;
}

double ObservablePolynomial::value(const Matrix& rho) const { return poly(coordinates(rho)); }

double ObservablePolynomial::gradient_pairing(const Matrix& rho, const Matrix& x) const {
  const auto z = coordinates(rho);
  const auto dx = coordinates(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += partial(z, i) * dx[i];
  return acc;
}

double ObservablePolynomial::hessian_form(const Matrix& rho, const Matrix& x) const {
  if (degree_ < 2) return 0.0;
  const auto z = coordinates(rho);
  const auto dx = coordinates(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z.size(); ++j) acc += second_partial(z, i, j) * dx[i] * dx[j];
  }
  return acc;
}

}  // namespace qfilter
