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

#include "mimlm/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mimlm/error.hpp"
#include "mimlm/rng.hpp"

namespace mimlm {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Squared distance to the k-th nearest neighbour of every point.
std::vector<double> kth_neighbour_sq(const PointSet& p, std::size_t k) {
  std::vector<double> out(p.n);
  std::vector<double> heap;  // max-heap of the k smallest distances
  heap.reserve(k + 1);
  for (std::size_t i = 0; i < p.n; ++i) {
    heap.clear();
    const double* a = p.row(i);
    for (std::size_t j = 0; j < p.n; ++j) {
      if (j == i) continue;
      const double* b = p.row(j);
      double dist = 0;
      for (std::size_t c = 0; c < p.d; ++c) {
        const double diff = a[c] - b[c];
        dist += diff * diff;
      }
      if (heap.size() < k) {
        heap.push_back(dist);
        std::push_heap(heap.begin(), heap.end());
      } else if (dist < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = dist;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    out[i] = heap.front();
  }
  return out;
}

}  // namespace

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  PointSet p;
  p.n = rows.size();
  p.d = rows.empty() ? 0 : rows.front().size();
  p.values.reserve(p.n * p.d);
  for (const auto& r : rows) {
    if (r.size() != p.d) throw DimensionError("point set rows differ in length");
    p.values.insert(p.values.end(), r.begin(), r.end());
  }
  return p;
}

double digamma_int(std::size_t n) {
  if (n == 0) throw DomainError("digamma of 0");
  double acc = -kEulerGamma;
  for (std::size_t j = 1; j < n; ++j) acc += 1.0 / static_cast<double>(j);
  return acc;
}

double log_unit_ball_volume(std::size_t d) {
  const double half = static_cast<double>(d) / 2.0;
  return half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
}

double std_normal_entropy(std::size_t d) {
  return 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

double knn_entropy(const PointSet& codes, std::size_t k, const WarningSink& warn) {
  if (k < 1) throw ConfigError("knn_entropy: k must be >= 1");
  if (codes.n <= k) {
    throw ConfigError("knn_entropy: need more than k=" + std::to_string(k) +
                      " points, got " + std::to_string(codes.n));
  }
  if (codes.d == 0) throw DimensionError("knn_entropy: zero-dimensional points");
  std::vector<double> sq = kth_neighbour_sq(codes, k);
  if (std::any_of(sq.begin(), sq.end(), [](double v) { return v == 0.0; })) {
    if (warn) warn("knn_entropy: duplicate points, jittering by 1e-10");
    PointSet jittered = codes;
    Rng rng(0x6a177e5ULL);
    for (double& v : jittered.values) v += 1e-10 * rng.normal();
    sq = kth_neighbour_sq(jittered, k);
  }
  double log_sum = 0;
  for (double v : sq) log_sum += 0.5 * std::log(v);
  const double n = static_cast<double>(codes.n);
  return digamma_int(codes.n) - digamma_int(k) + log_unit_ball_volume(codes.d) +
         static_cast<double>(codes.d) / n * log_sum;
}

GaussianFit fit_diag_gaussian_entropy(const PointSet& codes, const WarningSink& warn) {
  if (codes.n < 2) throw ConfigError("Gaussian fit needs at least 2 points");
  GaussianFit fit;
  fit.sigma.assign(codes.d, 0.0);
  double var_sum = 0;
  bool floored = false;
  for (std::size_t c = 0; c < codes.d; ++c) {
    double mean = 0;
    for (std::size_t i = 0; i < codes.n; ++i) mean += codes.row(i)[c];
    mean /= static_cast<double>(codes.n);
    double ss = 0;
    for (std::size_t i = 0; i < codes.n; ++i) {
      const double diff = codes.row(i)[c] - mean;
      ss += diff * diff;
    }
    double s = std::sqrt(ss / static_cast<double>(codes.n - 1));
    if (s < 1e-12) {
      s = 1e-12;
      floored = true;
    }
    fit.sigma[c] = s;
    var_sum += s * s;
    fit.entropy += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * s * s);
    fit.mean_sigma += s;
  }
  if (floored && warn) warn("Gaussian fit: zero-variance dimension floored at 1e-12");
  fit.mean_sigma /= static_cast<double>(codes.d);
  fit.rms_sigma = std::sqrt(var_sum / static_cast<double>(codes.d));
  return fit;
}

}  // namespace mimlm
