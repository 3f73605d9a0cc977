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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mimlm/tensor.hpp"

namespace mimlm {

// L2 norm over the gradients of all tensors; absent gradients count as zero.
double global_grad_norm(std::span<Tensor* const> params);

// Scales all gradients so their global norm is at most max_norm.  Returns the
// norm before clipping.
double clip_grad_norm(std::span<Tensor* const> params, double max_norm);

struct AdamState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::int64_t t = 0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on params using their grad buffers.
void adam_step(std::span<Tensor* const> params, AdamState& state, double lr,
               const AdamOptions& opt = {});

// Clips to clip_l2 (when the global norm exceeds it), then p -= lr * g.
void sgd_clipped_step(std::span<Tensor* const> params, double lr,
                      double clip_l2);

// Multiplies the learning rate by factor after `patience` consecutive epochs
// without a strict improvement of the best validation loss.
class PlateauScheduler {
 public:
  PlateauScheduler(std::size_t patience, double factor = 0.25);

  // Feeds one epoch's validation loss; true when a decay event fires.
  bool observe(double valid_loss);

  double factor() const { return factor_; }
  std::size_t patience() const { return patience_; }
  double best() const { return best_; }
  std::size_t bad_epochs() const { return bad_epochs_; }
  void restore(double best, std::size_t bad_epochs) {
    best_ = best;
    bad_epochs_ = bad_epochs;
  }

 private:
  std::size_t patience_;
  double factor_;
  double best_;
  std::size_t bad_epochs_ = 0;
};

// Epoch indices (1-based) after which the scheduler decays over a history.
std::vector<std::size_t> plateau_events(std::span<const double> history,
                                        std::size_t patience);

}  // namespace mimlm
