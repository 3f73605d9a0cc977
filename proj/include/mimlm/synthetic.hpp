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

// A small context-free grammar for desk-scale experiments:
//   S  -> NP VERB NP [PREP NP]
//   NP -> DET [ADJ] NOUN
// Every slot draws uniformly from its own word pool, so two random
// sentences share few words and sentences run 5 to 11 tokens.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mimlm/rng.hpp"

namespace mimlm {

std::string grammar_sentence(Rng& rng);

// n distinct sentences.
std::vector<std::string> grammar_sentences(std::size_t n, Rng& rng);

struct GrammarSplits {
  std::vector<std::string> train, valid, test;
};

// Disjoint splits drawn from one stream.
GrammarSplits grammar_corpus(std::size_t n_train, std::size_t n_valid,
                             std::size_t n_test, std::uint64_t seed);

// Writes train.txt, valid.txt and test.txt into dir.
void write_corpus(const GrammarSplits& splits, const std::filesystem::path& dir);

}  // namespace mimlm
