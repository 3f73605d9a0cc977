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

#include "mimlm/synthetic.hpp"

#include <array>
#include <fstream>
#include <span>
#include <unordered_set>

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

constexpr std::array<const char*, 6> kDet{"the", "a", "every", "some", "this", "that"};
constexpr std::array<const char*, 10> kAdj{"red",  "small", "old",   "quiet", "happy",
                                           "dark", "quick", "brave", "tired", "green"};
constexpr std::array<const char*, 14> kNoun{"dog",   "cat",    "bird",  "farmer", "king",
                                            "child", "doctor", "horse", "robot",  "sailor",
                                            "fox",   "queen",  "pilot", "baker"};
constexpr std::array<const char*, 10> kVerb{"sees",   "follows", "helps", "calls", "finds",
                                            "paints", "feeds",   "hears", "meets", "loves"};
constexpr std::array<const char*, 6> kPrep{"near", "behind", "under", "with", "beside", "past"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& pool, Rng& rng) {
  return pool[rng.below(N)];
}

void noun_phrase(std::string& s, Rng& rng) {
  s += pick(kDet, rng);
  if (rng.bernoulli(0.5)) {
    s += ' ';
    s += pick(kAdj, rng);
  }
  s += ' ';
  s += pick(kNoun, rng);
}

}  // namespace

std::string grammar_sentence(Rng& rng) {
  std::string s;
  noun_phrase(s, rng);
  s += ' ';
  s += pick(kVerb, rng);
  s += ' ';
  noun_phrase(s, rng);
  if (rng.bernoulli(0.5)) {
    s += ' ';
    s += pick(kPrep, rng);
    s += ' ';
    noun_phrase(s, rng);
  }
  return s;
}

std::vector<std::string> grammar_sentences(std::size_t n, Rng& rng) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  while (out.size() < n) {
    auto s = grammar_sentence(rng);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

GrammarSplits grammar_corpus(std::size_t n_train, std::size_t n_valid,
                             std::size_t n_test, std::uint64_t seed) {
  Rng rng = Rng(seed).split("grammar");
  auto all = grammar_sentences(n_train + n_valid + n_test, rng);
  GrammarSplits g;
  g.train.assign(all.begin(), all.begin() + n_train);
  g.valid.assign(all.begin() + n_train, all.begin() + n_train + n_valid);
  g.test.assign(all.begin() + n_train + n_valid, all.end());
  return g;
}

void write_corpus(const GrammarSplits& splits, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const std::vector<std::string>& lines) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    for (const auto& l : lines) out << l << '\n';
  };
  dump("train.txt", splits.train);
  dump("valid.txt", splits.valid);
  dump("test.txt", splits.test);
}

}  // namespace mimlm
