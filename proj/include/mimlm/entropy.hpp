// Copyright 2026 The mimlm Authors.
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

// Differential entropy of latent code sets.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mimlm {

// n points of dimension d, row-major.
struct PointSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;

  static PointSet from_rows(const std::vector<std::vector<double>>& rows);
  const double* row(std::size_t i) const { return values.data() + i * d; }
};

using WarningSink = std::function<void(const std::string&)>;

// psi(n) for a positive integer n.
double digamma_int(std::size_t n);
// ln of the volume of the unit d-ball.
double log_unit_ball_volume(std::size_t d);

// Kozachenko-Leonenko k-nearest-neighbour estimate in nats:
//   psi(n) - psi(k) + ln V_d + (d/n) sum_i ln eps_i
// with eps_i the Euclidean distance from point i to its k-th neighbour.
// Duplicate points are jittered by 1e-10 and reported through warn.
double knn_entropy(const PointSet& codes, std::size_t k = 5,
                   const WarningSink& warn = {});

struct GaussianFit {
  double entropy = 0;     // nats
  double mean_sigma = 0;  // average per-dimension std
  double rms_sigma = 0;   // sqrt of the mean per-dimension variance
  std::vector<double> sigma;
};

// Per-dimension sample std (n-1 denominator) and the summed entropies
// sum_d 1/2 ln(2 pi e sigma_d^2).  Zero-variance dimensions are floored at
// 1e-12.
GaussianFit fit_diag_gaussian_entropy(const PointSet& codes,
                                      const WarningSink& warn = {});

// Entropy of N(0, I) in d dimensions, d/2 ln(2 pi e).
double std_normal_entropy(std::size_t d);

}  // namespace mimlm
