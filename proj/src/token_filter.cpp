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

#include "promptsmith/token_filter.hpp"

#include "promptsmith/errors.hpp"

namespace promptsmith::filter {

std::set<int> protect_words(const Prompt& prompt, std::span<const std::string> words) {
  std::set<int> out;
  const auto ws = prompt.words();
  for (std::size_t hit : text::find_all(ws, words))
    for (std::size_t i = 0; i < words.size(); ++i) out.insert(static_cast<int>(hit + i));
  return out;
}

std::vector<AblationRow> ablation_table(const Prompt& prompt, const Embedding& image_emb,
                                        const TextImageEncoder& encoder,
                                        const std::set<int>& protected_indices,
                                        kernels::Exec exec) {
  const auto words = prompt.words();
  if (words.size() < 2) throw PreconditionError("ablation needs a prompt of at least two words");

  const double baseline = clip_score(encoder.encode_words(words), image_emb);

  std::vector<int> indices;
  for (int m = 0; m < static_cast<int>(words.size()); ++m)
    if (!protected_indices.contains(m)) indices.push_back(m);

  std::vector<AblationRow> rows(indices.size());
  kernels::parallel_for(indices.size(), exec, [&](std::size_t i) {
    const int m = indices[i];
    text::Words ablated;
    ablated.reserve(words.size() - 1);
    for (int w = 0; w < static_cast<int>(words.size()); ++w)
      if (w != m) ablated.push_back(words[static_cast<std::size_t>(w)]);
    AblationRow row;
    row.removed_index = m;
    row.ablated_prompt = encoder.tokenizer().make_prompt(ablated);
    row.ablated_score = clip_score(encoder.encode_text(row.ablated_prompt), image_emb);
    row.baseline_score = baseline;
    row.redundant = row.ablated_score > baseline;
    rows[i] = std::move(row);
  });
  return rows;
}

FilterResult filter(const Prompt& prompt, const Embedding& image_emb,
                    const TextImageEncoder& encoder, const std::set<int>& protected_indices,
                    kernels::Exec exec) {
  const auto words = prompt.words();
  FilterResult result;
  result.rows = ablation_table(prompt, image_emb, encoder, protected_indices, exec);
  result.baseline_score = clip_score(encoder.encode_words(words), image_emb);

  std::set<int> drop;
  for (const auto& row : result.rows)
    if (row.redundant) drop.insert(row.removed_index);

  if (drop.size() == words.size()) {
    // Keep the word whose removal lowered the score the most.
    const AblationRow* keep = &result.rows.front();
    for (const auto& row : result.rows)
      if (row.ablated_score < keep->ablated_score) keep = &row;
    drop.erase(keep->removed_index);
    result.warnings.push_back("every word was redundant; kept word " +
                              std::to_string(keep->removed_index));
  }

  text::Words kept;
  for (int w = 0; w < static_cast<int>(words.size()); ++w) {
    if (drop.contains(w))
      result.removed.push_back(w);
    else
      kept.push_back(words[static_cast<std::size_t>(w)]);
  }
  result.prompt = encoder.tokenizer().make_prompt(kept);
  return result;
}

FilterResult filter(const Prompt& prompt, const Image& image, const TextImageEncoder& encoder,
                    const std::set<int>& protected_indices, kernels::Exec exec) {
  return filter(prompt, encoder.encode_image(image), encoder, protected_indices, exec);
}

void to_json(json& j, const AblationRow& r) {
  j = json{{"removed_index", r.removed_index},
           {"ablated_prompt", r.ablated_prompt},
           {"ablated_score", r.ablated_score},
           {"baseline_score", r.baseline_score},
           {"redundant", r.redundant}};
}

void to_json(json& j, const FilterResult& r) {
  j = json{{"prompt", r.prompt},
           {"baseline_score", r.baseline_score},
           {"rows", r.rows},
           {"removed", r.removed},
           {"warnings", r.warnings}};
}

}  // namespace promptsmith::filter
