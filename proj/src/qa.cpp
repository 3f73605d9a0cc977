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

#include "mimlm/qa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mimlm/error.hpp"
#include "mimlm/losses.hpp"

namespace mimlm {

nlohmann::json QAResult::to_json() const {
  return {{"p_at_1", p_at_1},
          {"mrr", mrr},
          {"n_items", true_ranks.size()},
          {"true_ranks", true_ranks},
          {"rankings", rankings},
          {"scores", scores}};
}

TokenId question_mark_id(const Vocabulary& vocab) {
  auto id = vocab.find("?");
  if (!id) throw ConfigError("vocabulary has no \"?\" token; cannot compose QA pairs");
  return *id;
}

TokenSeq compose_pair(const TokenSeq& question, const TokenSeq& answer,
                      TokenId question_mark) {
  TokenSeq out;
  auto q = question.content();
  auto a = answer.content();
  out.ids.assign(q.begin(), q.end());
  out.ids.push_back(question_mark);
  out.ids.insert(out.ids.end(), a.begin(), a.end());
  out.ids.push_back(kEot);
  return out;
}

TokenSeq compose_unk_pair(const TokenSeq& question, std::size_t slots,
                          TokenId question_mark) {
  if (slots < 1) throw ConfigError("answer slot length must be >= 1");
  std::vector<TokenId> unk(slots, kUnk);
  return compose_pair(question, make_seq(unk), question_mark);
}

double reduce_sigma(std::span<const Real> sigma, SigmaReduction reduction) {
  if (sigma.empty()) throw DimensionError("reduce_sigma: empty std vector");
  double acc = 0;
  if (reduction == SigmaReduction::kL2Norm) {
    for (Real s : sigma) acc += static_cast<double>(s) * s;
    return std::sqrt(acc);
  }
  for (Real s : sigma) acc += s;
  return acc / static_cast<double>(sigma.size());
}

double normalized_distance(std::span<const Real> z_unk, std::span<const Real> z_k,
                           double sigma) {
  if (z_unk.size() != z_k.size()) throw DimensionError("latent codes differ in size");
  double acc = 0;
  for (std::size_t i = 0; i < z_k.size(); ++i) {
    const double d = static_cast<double>(z_unk[i]) - z_k[i];
    acc += d * d;
  }
  return std::sqrt(acc) / sigma;
}

double score_candidate(const ModelParams& p, const TokenSeq& question,
                       const TokenSeq& answer, TokenId question_mark, Rng& rng,
                       const QAOptions& options) {
  const std::size_t slots = std::max<std::size_t>(1, answer.content_size());
  std::vector<TokenSeq> inputs{compose_pair(question, answer, question_mark),
                               compose_unk_pair(question, slots, question_mark)};
  const auto post = encode_posteriors(p, inputs);
  const auto& q_k = post[0];
  const auto& q_unk = post[1];
  auto z_k = options.use_mean ? q_k.mu : sample_latent(q_k, rng);
  if (options.log_density_score) {
    return -diag_gaussian_logpdf(z_k, q_unk.mu, q_unk.log_sigma);
  }
  auto z_unk = options.use_mean ? q_unk.mu : sample_latent(q_unk, rng);
  const double sigma =
      options.unit_sigma ? 1.0 : reduce_sigma(q_unk.sigma(), options.reduction);
  return normalized_distance(z_unk, z_k, sigma);
}

QAResult rank_by_scores(std::vector<std::vector<double>> scores) {
  if (scores.empty()) throw ConfigError("no QA items to rank");
  QAResult r;
  double hits = 0, rr = 0;
  for (const auto& s : scores) {
    if (s.size() < 2) throw ConfigError("every QA item needs at least 2 candidates");
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    const std::size_t rank =
        static_cast<std::size_t>(std::find(order.begin(), order.end(), 0) - order.begin()) + 1;
    r.true_ranks.push_back(rank);
    r.rankings.push_back(std::move(order));
    if (rank == 1) hits += 1;
    rr += 1.0 / static_cast<double>(rank);
  }
  const double n = static_cast<double>(scores.size());
  r.p_at_1 = hits / n;
  r.mrr = rr / n;
  r.scores = std::move(scores);
  return r;
}

QAResult rank_and_metrics(const ModelParams& p, std::span<const QAItem> items,
                          TokenId question_mark, Rng rng,
                          const QAOptions& options) {
  std::vector<std::vector<double>> scores;
  scores.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const QAItem& item = items[i];
    Rng item_rng = rng.split(i);
    std::vector<double> s;
    for (std::size_t k = 0; k < item.answers.size(); ++k) {
      Rng cand_rng = item_rng.split(k);
      s.push_back(score_candidate(p, item.question, item.answers[k], question_mark,
                                  cand_rng, options));
    }
    scores.push_back(std::move(s));
  }
  return rank_by_scores(std::move(scores));
}

TokenSeq generate_answer(const ModelParams& p, const TokenSeq& question,
                         std::size_t slot_len, TokenId question_mark, Rng& rng,
                         std::size_t max_len) {
  const GaussianPosterior q =
      encode_posterior(p, compose_unk_pair(question, slot_len, question_mark));
  auto z = sample_latent(q, rng);
  TokenSeq full = decode_sample(p, z, DecodeStrategy::kGreedy, {kUnk}, max_len, rng);
  auto content = full.content();
  auto it = std::find(content.begin(), content.end(), question_mark);
  if (it == content.end()) return make_seq({});
  return make_seq(std::vector<TokenId>(it + 1, content.end()));
}

std::vector<QAItem> load_qa_items(const std::filesystem::path& path,
                                  const Vocabulary& vocab, std::size_t max_len) {
  std::vector<QAItem> items;
  std::size_t lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      QAItem item;
      item.question = encode(j.at("question").get<std::string>(), vocab, max_len);
      for (const auto& a : j.at("answers"))
        item.answers.push_back(encode(a.get<std::string>(), vocab, max_len));
      if (item.answers.size() < 2) {
        throw FormatError("QA item on line " + std::to_string(lineno) +
                          " has fewer than 2 answers");
      }
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("QA file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (items.empty()) throw FormatError("QA file " + path.string() + " has no items");
  return items;
}

}  // namespace mimlm
