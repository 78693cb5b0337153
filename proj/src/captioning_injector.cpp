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

#include "promptsmith/captioning_injector.hpp"

#include <algorithm>

#include "promptsmith/errors.hpp"

namespace promptsmith::injector {

namespace {

text::Words window(const text::Words& words, int index, int len) {
  return {words.begin() + index, words.begin() + index + len};
}

}  // namespace

SynonymMatch match_at(const Prompt& caption, std::span<const std::string> source_attr, int index,
                      const TextImageEncoder& encoder) {
  const auto words = caption.words();
  const int len = static_cast<int>(source_attr.size());
  if (words.empty()) throw PreconditionError("caption is empty");
  if (len == 0) throw PreconditionError("source attribute is empty");
  if (index < 0 || index + len > static_cast<int>(words.size()))
    throw PreconditionError("synonym index " + std::to_string(index) + " out of range for a " +
                            std::to_string(words.size()) + "-word caption");
  const auto w = window(words, index, len);
  return SynonymMatch{index, len, text_similarity(w, source_attr, encoder)};
}

SynonymMatch find_synonym(const Prompt& caption, std::span<const std::string> source_attr,
                          const TextImageEncoder& encoder) {
  const auto words = caption.words();
  const int len = static_cast<int>(source_attr.size());
  if (words.empty()) throw PreconditionError("caption is empty");
  if (len == 0) throw PreconditionError("source attribute is empty");
  if (len > static_cast<int>(words.size()))
    throw NoMatchError("caption has " + std::to_string(words.size()) +
                       " words, fewer than the source attribute's " + std::to_string(len));

  const Embedding attr = encoder.encode_words(source_attr);
  SynonymMatch best{0, len, -INFINITY};
  for (int i = 0; i + len <= static_cast<int>(words.size()); ++i) {
    const double s = cosine_similarity(encoder.encode_words(window(words, i, len)), attr);
    if (s > best.similarity) best = {i, len, s};
  }
  return best;
}

Prompt build_truncated_candidate(const Image& image, const Prompt& caption,
                                 const SynonymMatch& match,
                                 std::span<const std::string> source_attr, const Captioner& captioner,
                                 std::optional<int> continuation_budget) {
  const auto words = caption.words();
  const int k = match.index;
  const int len = static_cast<int>(source_attr.size());
  if (k < 0 || k >= static_cast<int>(words.size()) || match.window_len != len)
    throw PreconditionError("synonym match does not belong to this caption");

  text::Words prefix(words.begin(), words.begin() + k);
  prefix.insert(prefix.end(), source_attr.begin(), source_attr.end());

  const int budget = continuation_budget.value_or(static_cast<int>(words.size()) - k + 4);
  const Prompt prefix_prompt = captioner.tokenizer().make_prompt(prefix);
  const Prompt continued = captioner.continue_caption(image, prefix_prompt, budget);

  auto out = continued.words();
  const std::size_t attr_end = static_cast<std::size_t>(k + len);
  for (std::size_t hit : text::find_all(out, source_attr)) {
    if (hit > static_cast<std::size_t>(k)) {
      out.resize(std::max(hit, attr_end));
      return captioner.tokenizer().make_prompt(out);
    }
  }
  return continued;
}

Prompt build_append_candidate(const Prompt& caption, std::span<const std::string> source_attr,
                              const Tokenizer& tokenizer) {
  const auto words = caption.words();
  if (words.empty()) throw PreconditionError("caption is empty");
  if (source_attr.empty()) throw PreconditionError("source attribute is empty");
  auto out = text::remove_all(words, source_attr);
  while (text::count_occurrences(out, source_attr) > 0) out = text::remove_all(out, source_attr);
  out.insert(out.end(), source_attr.begin(), source_attr.end());
  return tokenizer.make_prompt(out);
}

InjectionReport inject_with_caption(const Image& image, const Prompt& caption,
                                    std::span<const std::string> source_attr,
                                    const Gateway& gateway, const InjectorConfig& config) {
  if (source_attr.empty()) throw PreconditionError("source attribute is empty");
  const auto& encoder = *gateway.encoder;
  const auto& captioner = *gateway.captioner;

  InjectionReport report;
  report.generated_caption = caption;
  report.window_len = static_cast<int>(source_attr.size());

  std::optional<SynonymMatch> match;
  if (config.synonym_index_override) {
    match = match_at(caption, source_attr, *config.synonym_index_override, encoder);
    report.user_override = true;
  } else {
    try {
      match = find_synonym(caption, source_attr, encoder);
    } catch (const NoMatchError& e) {
      report.notes.push_back(std::string("no_match: ") + e.what());
    }
  }

  const Embedding image_emb = encoder.encode_image(image);

  if (match) {
    report.synonym_index = match->index;
    report.synonym_similarity = match->similarity;
    report.truncated_candidate = build_truncated_candidate(image, caption, *match, source_attr,
                                                           captioner, config.continuation_budget);
    report.candidate_scores["truncated"] =
        prompt_image_score(encoder, *report.truncated_candidate, image_emb);
  }

  if (text::count_occurrences(caption.words(), source_attr) > 0)
    report.notes.emplace_back("append_moved_existing_source");
  report.append_candidate = build_append_candidate(caption, source_attr, captioner.tokenizer());
  report.candidate_scores["append"] = prompt_image_score(encoder, report.append_candidate, image_emb);

  if (report.truncated_candidate &&
      report.candidate_scores.at("truncated") >= report.candidate_scores.at("append")) {
    report.chosen = *report.truncated_candidate;
    report.chosen_kind = CandidateKind::kTruncated;
  } else {
    report.chosen = report.append_candidate;
    report.chosen_kind = CandidateKind::kAppend;
  }
  return report;
}

InjectionReport inject(const Image& image, std::span<const std::string> source_attr,
                       const Gateway& gateway, const InjectorConfig& config) {
  return inject_with_caption(image, gateway.captioner->generate(image), source_attr, gateway,
                             config);
}

}  // namespace promptsmith::injector
