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

#include "mimlm/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

const char* const kReservedTokens[kNumReserved] = {"<BOT>", "<EOT>", "<UNK>",
                                                   "<PAD>"};

bool is_reserved_surface(std::string_view w) {
  for (const char* r : kReservedTokens)
    if (w == r) return true;
  return w == "<unk>";
}

}  // namespace

bool TokenSeq::well_formed(std::size_t vocab_size) const {
  if (ids.empty() || ids.back() != kEot) return false;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    TokenId t = ids[i];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) return false;
    if (t == kEot || t == kBot || t == kPad) return false;
  }
  return true;
}

TokenSeq make_seq(std::span<const TokenId> content) {
  TokenSeq s;
  s.ids.assign(content.begin(), content.end());
  s.ids.push_back(kEot);
  return s;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() {
  tokens_.assign(std::begin(kReservedTokens), std::end(kReservedTokens));
  index();
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    ids_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::build(std::span<const std::string> lines,
                             std::optional<std::size_t> max_size,
                             std::size_t min_freq) {
  std::map<std::string, std::size_t> counts;
  bool any = false;
  for (const std::string& line : lines) {
    for (std::string& w : split_whitespace(line)) {
      any = true;
      if (is_reserved_surface(w)) continue;
      ++counts[std::move(w)];
    }
  }
  if (!any) throw IoError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  // counts is ordered lexicographically, so a stable sort by frequency keeps
  // the lexicographic tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [word, n] : ranked) {
    if (n < min_freq) break;
    if (max_size && v.size() - kNumReserved >= *max_size) break;
    v.tokens_.push_back(word);
  }
  v.index();
  return v;
}

Vocabulary Vocabulary::build(std::istream& in,
                             std::optional<std::size_t> max_size,
                             std::size_t min_freq) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return build(lines, max_size, min_freq);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) {
    throw FormatError("vocabulary lists fewer than the reserved tokens");
  }
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != kReservedTokens[i]) {
      throw FormatError("vocabulary entry " + std::to_string(i) + " must be " +
                        kReservedTokens[i] + ", found " + tokens[i]);
    }
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index();
  if (v.ids_.size() != v.tokens_.size()) {
    throw FormatError("vocabulary contains duplicate tokens");
  }
  return v;
}

std::string Vocabulary::to_json() const { return nlohmann::json(tokens_).dump(); }

Vocabulary Vocabulary::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocabulary JSON: ") + e.what());
  }
  if (!j.is_array()) throw FormatError("vocabulary JSON must be a list");
  std::vector<std::string> tokens;
  for (const auto& t : j) {
    if (!t.is_string()) throw FormatError("vocabulary entries must be strings");
    tokens.push_back(t.get<std::string>());
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  out << to_json() << '\n';
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view word) const {
  auto found = find(word);
  if (!found || *found == kBot || *found == kEot || *found == kPad) return kUnk;
  return *found;
}

TokenSeq encode(std::string_view line, const Vocabulary& vocab,
                std::size_t max_len) {
  TokenSeq s;
  for (const std::string& w : split_whitespace(line)) {
    if (s.ids.size() >= max_len) break;
    s.ids.push_back(vocab.id(w));
  }
  s.ids.push_back(kEot);
  return s;
}

std::string decode(const TokenSeq& seq, const Vocabulary& vocab) {
  std::string out;
  for (TokenId t : seq.ids) {
    if (t == kEot) break;
    if (t == kBot || t == kPad) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(t);
  }
  return out;
}

TokenSeq reverse_for_encoder(const TokenSeq& seq) {
  TokenSeq r = seq;
  auto end = r.ids.end();
  if (!r.ids.empty() && r.ids.back() == kEot) --end;
  std::reverse(r.ids.begin(), end);
  return r;
}

TokenSeq corrupt_unk(const TokenSeq& seq, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("unk corruption rate must lie in [0, 1)");
  }
  TokenSeq r = seq;
  if (rate == 0.0) return r;
  for (TokenId& t : r.ids) {
    if (t == kEot) continue;
    if (rng.uniform() < rate) t = kUnk;
  }
  return r;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<TokenSeq> encode_lines(std::span<const std::string> lines,
                                   const Vocabulary& vocab,
                                   std::size_t max_len) {
  std::vector<TokenSeq> out;
  out.reserve(lines.size());
  for (const std::string& l : lines) out.push_back(encode(l, vocab, max_len));
  return out;
}

namespace {

// Blank lines separate documents in common corpora; they are not sentences.
std::vector<TokenSeq> encode_nonblank(std::span<const std::string> lines,
                                      const Vocabulary& vocab, std::size_t max_len) {
  std::vector<TokenSeq> out;
  for (const std::string& l : lines) {
    if (l.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(encode(l, vocab, max_len));
  }
  return out;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir, const Vocabulary& vocab,
                   std::size_t max_len) {
  Corpus c;
  auto train = read_lines(dir / "train.txt");
  auto valid = read_lines(dir / "valid.txt");
  c.train_lines = train.size();
  c.valid_lines = valid.size();
  c.train = encode_nonblank(train, vocab, max_len);
  c.valid = encode_nonblank(valid, vocab, max_len);
  if (std::filesystem::exists(dir / "test.txt")) {
    auto test = read_lines(dir / "test.txt");
    c.test_lines = test.size();
    c.test = encode_nonblank(test, vocab, max_len);
  }
  return c;
}

}  // namespace mimlm
