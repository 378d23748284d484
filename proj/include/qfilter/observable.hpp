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

#include <vector>

#include "qfilter/qstate.hpp"

namespace qfilter {

/// c * prod_i z_i^powers[i].
struct Monomial {
  double coefficient = 0.0;
  std::vector<int> powers;
};

/// Smooth test function f(rho) = g(z_1, ..., z_m) with z_i = tr(B_i rho),
/// B_i Hermitian and g a real polynomial of total degree at most 3.
///
/// Derivatives are taken along Hermitian directions:
///   (f'(rho), X)       = sum_i dg/dz_i tr(B_i X)
///   [X f''(rho) X]     = sum_ij d2g/dz_i dz_j tr(B_i X) tr(B_j X)
class ObservablePolynomial {
 public:
  static constexpr int kMaxDegree = 3;

  ObservablePolynomial(std::vector<Matrix> basis, std::vector<Monomial> terms);

  static ObservablePolynomial constant(double c);
  /// tr(B rho).
  static ObservablePolynomial linear(const Matrix& b);
  /// tr(B rho)^2.
  static ObservablePolynomial square(const Matrix& b);
  /// tr(B1 rho) tr(B2 rho).
  static ObservablePolynomial product(const Matrix& b1, const Matrix& b2);

  double value(const Matrix& rho) const;
  double gradient_pairing(const Matrix& rho, const Matrix& x) const;
  double hessian_form(const Matrix& rho, const Matrix& x) const;

  int degree() const { return degree_; }
  /// True when f is affine in rho, so E f(rho) = f(E rho).
  bool is_affine() const { return degree_ <= 1; }
  /// Dimension of the basis operators, or 0 for a constant.
  Index dim() const { return basis_.empty() ? 0 : basis_.front().rows(); }
  const std::vector<Matrix>& basis() const { return basis_; }
  const std::vector<Monomial>& terms() const { return terms_; }

 private:
  std::vector<double> coordinates(const Matrix& x) const;
  double poly(const std::vector<double>& z) const;
  double partial(const std::vector<double>& z, std::size_t i) const;
  double second_partial(const std::vector<double>& z, std::size_t i, std::size_t j) const;

  std::vector<Matrix> basis_;
  std::vector<Monomial> terms_;
  int degree_ = 0;
};

}  // namespace qfilter
