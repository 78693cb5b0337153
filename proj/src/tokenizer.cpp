// Copyright 2026 The Promptsmith Authors.
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

#include "promptsmith/tokenizer.hpp"

#include "promptsmith/errors.hpp"

namespace promptsmith {

Prompt Tokenizer::make_prompt(std::string_view text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw PreconditionError("prompt text is empty");
  return from_tokens(tokens);
}

Prompt Tokenizer::make_prompt(std::span<const std::string> words) const {
  return make_prompt(text::join_words(words));
}

Prompt Tokenizer::from_tokens(std::span<const TokenId> tokens) const {
  return Prompt{{tokens.begin(), tokens.end()}, decode(tokens), id()};
}

Prompt Tokenizer::retokenize(const Prompt& p) const {
  if (p.vocab_id == id()) return p;
  return make_prompt(p.text);
}

WordVocabulary::WordVocabulary(std::string id, std::vector<std::string> words)
    : id_(std::move(id)), words_(std::move(words)) {
  if (words_.size() < 2) throw PreconditionError("vocabulary needs at least two entries");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] != text::normalize_word(words_[i]) || words_[i].empty())
      throw PreconditionError("vocabulary word '" + words_[i] + "' is not normalized");
    if (!index_.emplace(words_[i], static_cast<TokenId>(i)).second)
      throw PreconditionError("duplicate vocabulary word '" + words_[i] + "'");
  }
}

std::vector<TokenId> WordVocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& w : text::normalized_words(text)) out.push_back(id_of(w));
  return out;
}

std::string WordVocabulary::decode(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw PreconditionError("cannot decode an empty token sequence");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    if (t < 0 || static_cast<std::size_t>(t) >= words_.size())
      throw VocabularyError("token id " + std::to_string(t) + " not in vocabulary '" + id_ + "'");
    if (i) out.push_back(' ');
    out += words_[static_cast<std::size_t>(t)];
  }
  return out;
}

bool WordVocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

TokenId WordVocabulary::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end())
    throw VocabularyError("word '" + std::string(word) + "' not in vocabulary '" + id_ + "'");
  return it->second;
}

}  // namespace promptsmith
