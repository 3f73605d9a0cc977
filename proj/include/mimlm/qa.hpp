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

// Zero-shot question answering with a sentence auto-encoder.  A question is
// paired with each candidate as "Q ? A" and with a run of <UNK> slots as
// "Q ? <UNK>...".  Candidates are ranked by how close their latent code lies
// to the <UNK> code, measured in units of the <UNK> posterior's spread.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "mimlm/model.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

struct QAItem {
  TokenSeq question;
  std::vector<TokenSeq> answers;  // answers[0] is the true answer
};

struct QAResult {
  std::vector<std::vector<std::size_t>> rankings;  // candidate order per item
  std::vector<std::size_t> true_ranks;             // 1-based rank of answers[0]
  std::vector<std::vector<double>> scores;
  double p_at_1 = 0;
  double mrr = 0;

  nlohmann::json to_json() const;
};

enum class SigmaReduction { kL2Norm, kMean };

struct QAOptions {
  // Posterior means instead of samples for both codes.
  bool use_mean = false;
  SigmaReduction reduction = SigmaReduction::kL2Norm;
  // Divide by 1 instead of the posterior spread (deterministic models).
  bool unit_sigma = false;
  // Experimental: score by -log q(z^k | Q^unk) instead of the distance.
  bool log_density_score = false;
};

// Id of "?"; ConfigError when the vocabulary lacks it.
TokenId question_mark_id(const Vocabulary& vocab);

// question content ++ "?" ++ answer content ++ <EOT>
TokenSeq compose_pair(const TokenSeq& question, const TokenSeq& answer,
                      TokenId question_mark);
TokenSeq compose_unk_pair(const TokenSeq& question, std::size_t slots,
                          TokenId question_mark);

double reduce_sigma(std::span<const Real> sigma, SigmaReduction reduction);
// ||z_unk - z_k|| / sigma
double normalized_distance(std::span<const Real> z_unk, std::span<const Real> z_k,
                           double sigma);

// Lower is better.
double score_candidate(const ModelParams& p, const TokenSeq& question,
                       const TokenSeq& answer, TokenId question_mark, Rng& rng,
                       const QAOptions& options = {});

// Stable ascending sort of each item's scores; metrics against index 0.
QAResult rank_by_scores(std::vector<std::vector<double>> scores);

QAResult rank_and_metrics(const ModelParams& p, std::span<const QAItem> items,
                          TokenId question_mark, Rng rng,
                          const QAOptions& options = {});

// Greedy decoding of "Q ? <UNK>x slots" with <UNK> banned; the tokens after
// the first generated "?" (empty when none is generated).
TokenSeq generate_answer(const ModelParams& p, const TokenSeq& question,
                         std::size_t slot_len, TokenId question_mark, Rng& rng,
                         std::size_t max_len = kDefaultMaxLen);

// JSON lines {"question": str, "answers": [str, ...]}.
std::vector<QAItem> load_qa_items(const std::filesystem::path& path,
                                  const Vocabulary& vocab,
                                  std::size_t max_len = kDefaultMaxLen);

}  // namespace mimlm
