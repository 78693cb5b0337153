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

// Redundant-word removal by single-word ablation. Each unprotected word is
// dropped in turn and the shortened prompt is scored against the image; a
// word whose removal strictly raises the score is redundant. All redundant
// words are removed together against one fixed baseline.

#include <set>
#include <span>
#include <string>
#include <vector>

#include "promptsmith/core.hpp"
#include "promptsmith/gateway.hpp"
#include "promptsmith/kernels.hpp"

namespace promptsmith::filter {

struct AblationRow {
  int removed_index = 0;
  Prompt ablated_prompt;
  double ablated_score = 0.0;
  double baseline_score = 0.0;
  bool redundant = false;
};

struct FilterResult {
  Prompt prompt;
  double baseline_score = 0.0;
  std::vector<AblationRow> rows;
  std::vector<int> removed;
  std::vector<std::string> warnings;
};

// Word positions covered by any occurrence of words in the prompt.
std::set<int> protect_words(const Prompt& prompt, std::span<const std::string> words);

// One row per unprotected word index, in index order. Throws
// PreconditionError for prompts shorter than two words.
std::vector<AblationRow> ablation_table(const Prompt& prompt, const Embedding& image_emb,
                                        const TextImageEncoder& encoder,
                                        const std::set<int>& protected_indices,
                                        kernels::Exec exec = kernels::Exec::kParallel);

// Output prompt is expressed in the encoder's vocabulary. If every word would
// be removed, the word whose removal hurt the score most is kept and a
// warning is recorded.
FilterResult filter(const Prompt& prompt, const Image& image, const TextImageEncoder& encoder,
                    const std::set<int>& protected_indices,
                    kernels::Exec exec = kernels::Exec::kParallel);

FilterResult filter(const Prompt& prompt, const Embedding& image_emb,
                    const TextImageEncoder& encoder, const std::set<int>& protected_indices,
                    kernels::Exec exec = kernels::Exec::kParallel);

void to_json(json& j, const AblationRow& r);
void to_json(json& j, const FilterResult& r);

}  // namespace promptsmith::filter
