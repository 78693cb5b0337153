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

// Domain value types shared by every pipeline stage. Nothing here calls a
// model or touches the filesystem; each type has a canonical JSON form.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "promptsmith/text.hpp"

namespace promptsmith {

using json = nlohmann::json;
using TokenId = std::int32_t;

// An ordered token sequence plus its decoded text. vocab_id names the
// tokenizer that produced the tokens so prompts from different token spaces
// are never mixed silently.
struct Prompt {
  std::vector<TokenId> tokens;
  std::string text;
  std::string vocab_id;

  text::Words words() const { return text::split_words(text); }

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

// The user's minimal editing intent: what to change and what to change it to.
struct AttributePair {
  text::Words source;
  text::Words target;

  // Throws PreconditionError unless both sides are non-empty and differ.
  void validate() const;

  // Whitespace-delimited words, normalized (lowercase, punctuation stripped).
  static AttributePair from_strings(std::string_view source, std::string_view target);

  friend bool operator==(const AttributePair&, const AttributePair&) = default;
};

enum class NormKind { kRaw, kUnit };

struct Embedding {
  std::vector<double> values;
  NormKind norm_kind = NormKind::kRaw;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  Embedding normalized() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

enum class PromptLevel { kOneNoun, kFullNouns, kFullDescription };

std::string_view to_string(PromptLevel level);
PromptLevel prompt_level_from_string(std::string_view s);

enum class CandidateKind { kTruncated, kAppend };

std::string_view to_string(CandidateKind kind);

// Provenance of a caption-injection run: both candidates, their image-text
// scores, and which one won.
struct InjectionReport {
  Prompt generated_caption;
  std::optional<int> synonym_index;
  std::optional<double> synonym_similarity;
  int window_len = 0;
  std::optional<Prompt> truncated_candidate;
  Prompt append_candidate;
  std::map<std::string, double> candidate_scores;
  Prompt chosen;
  CandidateKind chosen_kind = CandidateKind::kAppend;
  bool user_override = false;
  std::vector<std::string> notes;
};

void to_json(json& j, const Prompt& p);
void from_json(const json& j, Prompt& p);
void to_json(json& j, const AttributePair& p);
void from_json(const json& j, AttributePair& p);
void to_json(json& j, const Embedding& e);
void from_json(const json& j, Embedding& e);
void to_json(json& j, PromptLevel level);
void from_json(const json& j, PromptLevel& level);
void to_json(json& j, const InjectionReport& r);
void from_json(const json& j, InjectionReport& r);

}  // namespace promptsmith
