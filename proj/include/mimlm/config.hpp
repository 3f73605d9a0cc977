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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mimlm/losses.hpp"

namespace mimlm {

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  Objective objective = Objective::kMim;
  std::size_t latent_dim = 16;
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 512;
  std::size_t batch_size = 20;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  // Unset means the optimizer default: 1e-3 for Adam, 5.0 for SGD.
  std::optional<double> lr;
  // Unset means 0.25 for SGD and no clipping for Adam.
  std::optional<double> clip_l2;
  std::size_t plateau_patience = 2;
  double lr_decay = 0.25;
  std::size_t max_epochs = 20;
  std::uint64_t seed = 1;
  double dropout = 0.5;
  double unk_corrupt_rate = 0.0;
  std::size_t max_len = 128;
  std::size_t kl_anneal_steps = 10000;
  // Sentences are length-sorted inside windows of this many batches; 0
  // disables bucketing.
  std::size_t bucket_window = 10;
  double init_scale = 0.1;
  // Smooth lower bound on the encoder log sigma; unset leaves it unbounded.
  std::optional<double> log_sigma_floor;
  std::optional<std::size_t> vocab_max_size;
  std::size_t vocab_min_freq = 1;

  double effective_lr() const;
  // 0 means no clipping.
  double effective_clip() const;

  // Throws ConfigError naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Parses either a JSON object or "key = value" lines (# comments).
nlohmann::json parse_config_text(std::string_view text);
nlohmann::json read_config_file(const std::filesystem::path& path);
// Applies "key=value" overrides on top of a config object.
void apply_overrides(nlohmann::json& j, std::span<const std::string> overrides);
// Value of a "key=value" right-hand side: JSON literal when it parses as one,
// otherwise the raw string.
nlohmann::json parse_scalar(std::string_view text);

}  // namespace mimlm
