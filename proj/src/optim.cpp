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

#include "mimlm/optim.hpp"

#include <cmath>
#include <limits>

#include "mimlm/error.hpp"

namespace mimlm {

double global_grad_norm(std::span<Tensor* const> params) {
  double acc = 0;
  for (const Tensor* p : params) {
    for (Real g : p->grad()) acc += static_cast<double>(g) * g;
  }
  return std::sqrt(acc);
}

double clip_grad_norm(std::span<Tensor* const> params, double max_norm) {
  if (!(max_norm > 0)) throw ConfigError("clip_l2 must be positive");
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const Real scale = static_cast<Real>(max_norm / norm);
    for (Tensor* p : params)
      for (Real& g : p->grad()) g *= scale;
  }
  return norm;
}

void adam_step(std::span<Tensor* const> params, AdamState& state, double lr,
               const AdamOptions& opt) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->size(), Real(0));
      state.v[i].assign(params[i]->size(), Real(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam state does not match the parameter list");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) {
      throw DimensionError("adam state shape mismatch for parameter " +
                           std::to_string(i));
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = static_cast<Real>(opt.beta1 * m[k] + (1 - opt.beta1) * g[k]);
      v[k] = static_cast<Real>(opt.beta2 * v[k] + (1 - opt.beta2) * g[k] * g[k]);
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= static_cast<Real>(lr * mhat / (std::sqrt(vhat) + opt.eps));
    }
  }
}

void sgd_clipped_step(std::span<Tensor* const> params, double lr,
                      double clip_l2) {
  clip_grad_norm(params, clip_l2);
  for (Tensor* p : params) {
    auto g = p->grad();
    for (std::size_t k = 0; k < g.size(); ++k)
      (*p)[k] -= static_cast<Real>(lr * g[k]);
  }
}

PlateauScheduler::PlateauScheduler(std::size_t patience, double factor)
    : patience_(patience),
      factor_(factor),
      best_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw ConfigError("plateau patience must be >= 1");
  if (!(factor > 0 && factor <= 1)) {
    throw ConfigError("lr decay factor must lie in (0, 1]");
  }
}

bool PlateauScheduler::observe(double valid_loss) {
  if (valid_loss < best_) {
    best_ = valid_loss;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    return true;
  }
  return false;
}

std::vector<std::size_t> plateau_events(std::span<const double> history,
                                        std::size_t patience) {
  PlateauScheduler s(patience);
  std::vector<std::size_t> events;
  for (std::size_t i = 0; i < history.size(); ++i)
    if (s.observe(history[i])) events.push_back(i + 1);
  return events;
}

}  // namespace mimlm
