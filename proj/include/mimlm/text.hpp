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

// Word-level text handling: vocabulary, token sequences, corpora.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mimlm/rng.hpp"

namespace mimlm {

using TokenId = std::int32_t;

inline constexpr TokenId kBot = 0;
inline constexpr TokenId kEot = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kPad = 3;
inline constexpr std::size_t kNumReserved = 4;
inline constexpr std::size_t kDefaultMaxLen = 128;

// Content ids followed by a terminal <EOT>.  <BOT> is never stored; the
// decoder prepends it.
struct TokenSeq {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  // Number of content tokens (everything before <EOT>).
  std::size_t content_size() const { return ids.empty() ? 0 : ids.size() - 1; }
  std::span<const TokenId> content() const {
    return std::span<const TokenId>(ids).first(content_size());
  }
  bool well_formed(std::size_t vocab_size) const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

TokenSeq make_seq(std::span<const TokenId> content);

class Vocabulary {
 public:
  // Reserved tokens only.
  Vocabulary();

  // Whitespace tokens ranked by descending frequency, ties lexicographic.
  // max_size bounds the non-reserved entries.
  static Vocabulary build(std::span<const std::string> lines,
                          std::optional<std::size_t> max_size,
                          std::size_t min_freq);
  static Vocabulary build(std::istream& lines,
                          std::optional<std::size_t> max_size,
                          std::size_t min_freq);
  // tokens must start with the reserved tokens in id order.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_json() const;
  static Vocabulary from_json(std::string_view text);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  // <UNK> for unknown words.
  TokenId id(std::string_view word) const;
  std::optional<TokenId> find(std::string_view word) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::vector<std::string> split_whitespace(std::string_view line);

TokenSeq encode(std::string_view line, const Vocabulary& vocab,
                std::size_t max_len = kDefaultMaxLen);
// Content tokens joined by single spaces.
std::string decode(const TokenSeq& seq, const Vocabulary& vocab);
// Content reversed, <EOT> kept terminal.
TokenSeq reverse_for_encoder(const TokenSeq& seq);
// Each content token replaced by <UNK> with probability rate.
TokenSeq corrupt_unk(const TokenSeq& seq, double rate, Rng& rng);

struct Corpus {
  std::vector<TokenSeq> train;
  std::vector<TokenSeq> valid;
  std::vector<TokenSeq> test;
  std::size_t train_lines = 0;
  std::size_t valid_lines = 0;
  std::size_t test_lines = 0;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<TokenSeq> encode_lines(std::span<const std::string> lines,
                                   const Vocabulary& vocab,
                                   std::size_t max_len = kDefaultMaxLen);

// Reads train.txt, valid.txt and (when present) test.txt from dir, skipping
// blank lines.
Corpus load_corpus(const std::filesystem::path& dir, const Vocabulary& vocab,
                   std::size_t max_len = kDefaultMaxLen);

}  // namespace mimlm
