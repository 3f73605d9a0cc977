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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mimlm/checkpoint.hpp"
#include "mimlm/config.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double valid_loss = 0;
  double lr = 0;    // rate used during the epoch
  double beta = 0;  // KL weight at the end of the epoch (0 unless VAE)
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

// Minibatch index lists for one epoch.  Sentences are shuffled, length-sorted
// inside windows of bucket_window batches, cut into batches, and the batch
// order is shuffled again.
std::vector<std::vector<std::size_t>> make_batches(
    std::span<const TokenSeq> data, std::size_t batch_size,
    std::size_t bucket_window, Rng& rng);

// Objective on `data` in eval mode with a fixed stream.  VAE variants are
// scored with the full ELBO (beta = 1).
double validation_loss(const TrainConfig& config, const ModelParams& params,
                       std::span<const TokenSeq> data, Rng rng);

// Fresh run: parameters initialised from config.seed.
TrainResult train(const TrainConfig& config, const Vocabulary& vocab,
                  const Corpus& corpus, const TrainOptions& options = {});

// Continues a checkpoint until `max_epochs` total epochs.
TrainResult resume(Checkpoint checkpoint, const Corpus& corpus,
                   std::size_t max_epochs, const TrainOptions& options = {});

std::string epoch_log_csv(std::span<const EpochRecord> log);

}  // namespace mimlm
