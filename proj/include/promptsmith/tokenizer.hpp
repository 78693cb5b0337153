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

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptsmith/core.hpp"

namespace promptsmith {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual const std::string& id() const = 0;
  virtual std::size_t size() const = 0;

  // Throws VocabularyError for text that cannot be represented.
  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;

  // Throws PreconditionError on an empty sequence and VocabularyError on an
  // unknown id.
  virtual std::string decode(std::span<const TokenId> tokens) const = 0;

  Prompt make_prompt(std::string_view text) const;
  Prompt make_prompt(std::span<const std::string> words) const;
  Prompt from_tokens(std::span<const TokenId> tokens) const;

  // Re-expresses a prompt from another token space in this one, via its text.
  Prompt retokenize(const Prompt& p) const;
};

// Closed word-level vocabulary: one token per normalized word.
class WordVocabulary final : public Tokenizer {
 public:
  WordVocabulary(std::string id, std::vector<std::string> words);

  const std::string& id() const override { return id_; }
  std::size_t size() const override { return words_.size(); }
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string decode(std::span<const TokenId> tokens) const override;

  const std::vector<std::string>& words() const { return words_; }
  bool contains(std::string_view word) const;
  TokenId id_of(std::string_view word) const;

 private:
  std::string id_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace promptsmith
