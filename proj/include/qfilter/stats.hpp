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

#include <cstddef>
#include <vector>

namespace qfilter {

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error of the mean (n - 1 normalization).
MeanSe mean_se(const std::vector<double>& x);

double median(std::vector<double> x);

/// Empirical quantile with linear interpolation, q in [0, 1].
double quantile(std::vector<double> x, double q);

struct KsResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double p_value = 1.0;    // asymptotic Kolmogorov distribution
};

/// Two-sample Kolmogorov-Smirnov test. The p-value uses the Kolmogorov series
/// at lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D with ne = n m / (n + m).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Q_KS(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Least-squares slope of log(y) against log(x). Entries with y <= 0 are
/// rejected with a ValidationError.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qfilter
