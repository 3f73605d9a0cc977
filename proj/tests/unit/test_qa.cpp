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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mimlm/error.hpp"
#include "mimlm/qa.hpp"
#include "mimlm/trainer.hpp"

using namespace mimlm;

namespace {

TokenSeq seq(std::vector<TokenId> content) { return make_seq(content); }

Vocabulary qa_vocab() {
  return Vocabulary::build(std::vector<std::string>{"w1 ? w2 w3"}, {}, 1);
}

}  // namespace

TEST_CASE("compose_pair layouts") {
  const auto v = qa_vocab();
  const TokenId qm = question_mark_id(v);
  const TokenId w1 = v.id("w1"), w2 = v.id("w2");
  const TokenSeq q = seq({w1}), a = seq({w2});
  CHECK(compose_pair(q, a, qm).ids == std::vector<TokenId>{w1, qm, w2, kEot});
  CHECK(compose_unk_pair(q, 3, qm).ids == std::vector<TokenId>{w1, qm, kUnk, kUnk, kUnk, kEot});
  CHECK_THROWS_AS(compose_unk_pair(q, 0, qm), ConfigError);

  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenId> qc(rng.below(6)), ac(rng.below(6));
    for (auto& t : qc) t = static_cast<TokenId>(4 + rng.below(3));
    for (auto& t : ac) t = static_cast<TokenId>(4 + rng.below(3));
    const auto c = compose_pair(make_seq(qc), make_seq(ac), qm);
    CHECK(c.ids.size() == qc.size() + 1 + ac.size() + 1);
    CHECK(c.ids.back() == kEot);
  }
}

TEST_CASE("question mark must be in the vocabulary") {
  const auto v = Vocabulary::build(std::vector<std::string>{"no marks here"}, {}, 1);
  CHECK_THROWS_AS(question_mark_id(v), ConfigError);
}

TEST_CASE("sigma reductions and normalized distance") {
  const std::vector<Real> s{3, 4};
  CHECK(reduce_sigma(s, SigmaReduction::kL2Norm) == doctest::Approx(5.0));
  CHECK(reduce_sigma(s, SigmaReduction::kMean) == doctest::Approx(3.5));
  const std::vector<Real> a{1, 1}, b{4, 5};
  CHECK(normalized_distance(a, b, 5.0) == doctest::Approx(1.0));
  CHECK(normalized_distance(a, a, 0.1) == 0.0);
  const std::vector<Real> c{1};
  CHECK_THROWS_AS(normalized_distance(a, c, 1.0), DimensionError);
}

TEST_CASE("rank_by_scores metrics") {
  auto r = rank_by_scores({{0.1, 0.5, 0.9}, {0.0, 2.0}});
  CHECK(r.p_at_1 == 1.0);
  CHECK(r.mrr == 1.0);

  // true ranks 1, 2, 4
  r = rank_by_scores({{1.0, 2.0, 3.0, 4.0}, {2.0, 1.0, 3.0, 4.0}, {4.0, 1.0, 2.0, 3.0}});
  CHECK(r.true_ranks == std::vector<std::size_t>{1, 2, 4});
  CHECK(std::abs(r.p_at_1 - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(r.mrr - (1.0 + 0.5 + 0.25) / 3.0) < 1e-12);
  CHECK(std::round(r.mrr * 1e4) / 1e4 == doctest::Approx(0.5833));
  CHECK(r.rankings[2] == std::vector<std::size_t>{1, 2, 3, 0});

  CHECK_THROWS_AS(rank_by_scores({}), ConfigError);
  CHECK_THROWS_AS(rank_by_scores({{1.0}}), ConfigError);
}

TEST_CASE("ties keep the original candidate order") {
  auto r = rank_by_scores({{1.0, 1.0, 1.0}, {2.0, 1.0, 1.0}});
  CHECK(r.rankings[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(r.true_ranks == std::vector<std::size_t>{1, 3});
}

TEST_CASE("null model precision at one") {
  Rng rng(2);
  std::vector<std::vector<double>> scores(10000, std::vector<double>(4));
  for (auto& s : scores)
    for (double& v : s) v = rng.uniform();
  const auto r = rank_by_scores(scores);
  CHECK(std::abs(r.p_at_1 - 0.25) < 0.02);
  // E[1/rank] for a uniform rank over 4 = 25/48
  CHECK(std::abs(r.mrr - 25.0 / 48.0) < 0.02);
}

TEST_CASE("load_qa_items") {
  const auto dir = std::filesystem::temp_directory_path() / "mimlm_qa_items";
  std::filesystem::create_directories(dir);
  const auto v = qa_vocab();
  std::ofstream(dir / "ok.jsonl") << R"({"question": "w1", "answers": ["w2", "w3"]})" << "\n\n"
                                  << R"({"question": "w2 w1", "answers": ["w3", "zz"]})" << "\n";
  const auto items = load_qa_items(dir / "ok.jsonl", v);
  REQUIRE(items.size() == 2);
  CHECK(items[1].answers[1].ids == std::vector<TokenId>{kUnk, kEot});
  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  CHECK_THROWS_AS(load_qa_items(dir / "bad.jsonl", v), FormatError);
  std::ofstream(dir / "short.jsonl") << R"({"question": "w1"})" << "\n";
  CHECK_THROWS_AS(load_qa_items(dir / "short.jsonl", v), FormatError);
  CHECK_THROWS_AS(load_qa_items(dir / "missing.jsonl", v), IoError);
}

TEST_CASE("score and rank on a trained pairing model") {
  // Two questions share each answer, so the encoder has to read the question;
  // with <UNK> corruption "q ? <UNK>" is trained to reconstruct "q ? right".
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"alpha", "red"}, {"beta", "red"}, {"gamma", "blue"}, {"delta", "blue"}};
  std::vector<std::string> lines;
  for (const auto& [q, a] : pairs) lines.push_back(q + " ? " + a);
  Corpus corpus;
  const auto v = Vocabulary::build(lines, {}, 1);
  corpus.train = encode_lines(lines, v);
  TrainConfig c;
  c.objective = Objective::kAe;
  c.latent_dim = 4;
  c.embed_dim = 8;
  c.hidden_dim = 32;
  c.batch_size = 1;
  c.dropout = 0;
  c.unk_corrupt_rate = 0.5;
  c.lr = 0.003;
  c.max_epochs = 1000;
  c.seed = 3;
  c.plateau_patience = 1000;
  const auto trained = train(c, v, corpus);
  const auto& p = trained.checkpoint.eval_params();
  const TokenId qm = question_mark_id(v);

  std::vector<QAItem> items;
  for (const auto& [q, a] : pairs) {
    QAItem it;
    it.question = encode(q, v);
    it.answers = {encode(a, v), encode(a == "red" ? "blue" : "red", v)};
    items.push_back(it);
  }
  QAOptions o;
  o.use_mean = true;
  o.unit_sigma = true;
  const auto r = rank_and_metrics(p, items, qm, Rng(4), o);
  CHECK(r.p_at_1 == 1.0);
  CHECK(r.mrr == 1.0);
  CHECK(r.to_json().at("n_items") == 4);

  Rng rng(5);
  CHECK(generate_answer(p, encode("alpha", v), 1, qm, rng).ids == encode("red", v).ids);
  CHECK(generate_answer(p, encode("delta", v), 1, qm, rng).ids == encode("blue", v).ids);
}
