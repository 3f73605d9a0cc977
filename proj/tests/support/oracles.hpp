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

// Independent reference computations: central finite differences, grid
// quadrature and Monte Carlo helpers.  Nothing here calls backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mimlm/autodiff.hpp"
#include "mimlm/losses.hpp"
#include "mimlm/model.hpp"
#include "mimlm/tensor.hpp"

namespace mimlm::testing {

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(std::span<const Real> a, std::span<const Real> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

// Central differences of f over every entry of x.
inline std::vector<Real> numeric_gradient(Tensor& x, const std::function<double()>& f,
                                          double step = 1e-5) {
  std::vector<Real> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    g[i] = static_cast<Real>((up - down) / (2 * step));
  }
  return g;
}

// Gradient of a scalar built by `build` from one parameter tensor, via the tape.
inline std::vector<Real> tape_gradient(Tensor& x,
                                       const std::function<ad::Var(ad::Graph&, ad::Var)>& build) {
  x.zero_grad();
  ad::Graph g;
  ad::Var root = build(g, g.parameter(x));
  g.backward(root);
  return std::vector<Real>(x.grad().begin(), x.grad().end());
}

inline double tape_value(Tensor& x, const std::function<ad::Var(ad::Graph&, ad::Var)>& build) {
  ad::Graph g(false);
  return build(g, g.input(x)).item();
}

// Relative error between tape and finite-difference gradients of a
// single-input scalar function.
inline double op_gradient_error(Tensor& x,
                                const std::function<ad::Var(ad::Graph&, ad::Var)>& build,
                                double step = 1e-5) {
  const auto analytic = tape_gradient(x, build);
  const auto numeric = numeric_gradient(x, [&] { return tape_value(x, build); }, step);
  return relative_error(analytic, numeric);
}

struct GroupError {
  std::string name;
  double rel = 0;
};

// Per-parameter-group gradient check of a model loss.  `loss` must be
// deterministic given the parameters (fixed RNG stream inside).
inline std::vector<GroupError> model_gradient_errors(
    ModelParams& p, const std::function<ad::Var(ad::Graph&, const BoundModel&)>& loss,
    double step = 1e-5) {
  p.zero_grad();
  {
    ad::Graph g;
    BoundModel m = bind(g, p, 0.0);
    g.backward(loss(g, m));
  }
  auto value = [&] {
    ad::Graph g(false);
    BoundModel m = bind_const(g, p);
    return static_cast<double>(loss(g, m).item());
  };
  std::vector<GroupError> out;
  for (auto& [name, t] : p.named()) {
    std::vector<Real> analytic(t->grad().begin(), t->grad().end());
    const auto numeric = numeric_gradient(*t, value, step);
    out.push_back({name, relative_error(analytic, numeric)});
  }
  return out;
}

// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

inline double sample_mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
  const double m = sample_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace mimlm::testing
