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

// Binary checkpoint: "MIMLMCKP", u32 version, u64 header length, a JSON
// header (config, vocabulary, counters, tensor table), then little-endian
// tensor payloads at the offsets the table lists.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mimlm/config.hpp"
#include "mimlm/model.hpp"
#include "mimlm/optim.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Vocabulary vocab;
  ModelParams params;                      // latest
  std::optional<ModelParams> best_params;  // best validation loss so far
  AdamState adam;
  std::size_t step = 0;
  std::size_t epoch = 0;
  double best_valid = 0;
  double lr = 0;
  std::size_t plateau_bad_epochs = 0;

  // Parameters to evaluate: the best-validation ones when recorded.
  const ModelParams& eval_params() const {
    return best_params ? *best_params : params;
  }
};

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mimlm
