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

#include "promptsmith/core.hpp"

#include <cmath>

#include "promptsmith/errors.hpp"

namespace promptsmith {

void AttributePair::validate() const {
  if (source.empty()) throw PreconditionError("source attribute is empty");
  if (target.empty()) throw PreconditionError("target attribute is empty");
  if (source == target) throw PreconditionError("source and target attributes are identical");
}

AttributePair AttributePair::from_strings(std::string_view source, std::string_view target) {
  AttributePair p{text::normalized_words(source), text::normalized_words(target)};
  p.validate();
  return p;
}

double Embedding::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

Embedding Embedding::normalized() const {
  const double n = norm();
  if (n == 0.0) throw ContractError("cannot normalize a zero embedding");
  Embedding out{values, NormKind::kUnit};
  for (double& v : out.values) v /= n;
  return out;
}

std::string_view to_string(PromptLevel level) {
  switch (level) {
    case PromptLevel::kOneNoun: return "one_noun";
    case PromptLevel::kFullNouns: return "full_nouns";
    case PromptLevel::kFullDescription: return "full_description";
  }
  return "unknown";
}

PromptLevel prompt_level_from_string(std::string_view s) {
  if (s == "one_noun") return PromptLevel::kOneNoun;
  if (s == "full_nouns") return PromptLevel::kFullNouns;
  if (s == "full_description") return PromptLevel::kFullDescription;
  throw PreconditionError("unknown prompt level '" + std::string(s) + "'");
}

std::string_view to_string(CandidateKind kind) {
  return kind == CandidateKind::kTruncated ? "truncated" : "append";
}

void to_json(json& j, const Prompt& p) {
  j = json{{"tokens", p.tokens}, {"text", p.text}, {"vocab_id", p.vocab_id}};
}

void from_json(const json& j, Prompt& p) {
  j.at("tokens").get_to(p.tokens);
  j.at("text").get_to(p.text);
  j.at("vocab_id").get_to(p.vocab_id);
}

void to_json(json& j, const AttributePair& p) {
  j = json{{"source", p.source}, {"target", p.target}};
}

void from_json(const json& j, AttributePair& p) {
  j.at("source").get_to(p.source);
  j.at("target").get_to(p.target);
}

void to_json(json& j, const Embedding& e) {
  j = json{{"values", e.values}, {"norm_kind", e.norm_kind == NormKind::kUnit ? "unit" : "raw"}};
}

void from_json(const json& j, Embedding& e) {
  j.at("values").get_to(e.values);
  e.norm_kind = j.value("norm_kind", "raw") == "unit" ? NormKind::kUnit : NormKind::kRaw;
  if (e.norm_kind == NormKind::kUnit && std::abs(e.norm() - 1.0) >= 1e-5)
    throw ContractError("embedding marked unit but has norm " + std::to_string(e.norm()));
}

void to_json(json& j, PromptLevel level) { j = std::string(to_string(level)); }

void from_json(const json& j, PromptLevel& level) {
  level = prompt_level_from_string(j.get<std::string>());
}

void to_json(json& j, const InjectionReport& r) {
  j = json{{"generated_caption", r.generated_caption},
           {"synonym_index", r.synonym_index ? json(*r.synonym_index) : json(nullptr)},
           {"synonym_similarity",
            r.synonym_similarity ? json(*r.synonym_similarity) : json(nullptr)},
           {"window_len", r.window_len},
           {"truncated_candidate",
            r.truncated_candidate ? json(*r.truncated_candidate) : json(nullptr)},
           {"append_candidate", r.append_candidate},
           {"candidate_scores", r.candidate_scores},
           {"chosen", r.chosen},
           {"chosen_kind", std::string(to_string(r.chosen_kind))},
           {"user_override", r.user_override},
           {"notes", r.notes}};
}

void from_json(const json& j, InjectionReport& r) {
  j.at("generated_caption").get_to(r.generated_caption);
  const auto& k = j.at("synonym_index");
  r.synonym_index = k.is_null() ? std::nullopt : std::optional<int>(k.get<int>());
  const auto& s = j.at("synonym_similarity");
  r.synonym_similarity = s.is_null() ? std::nullopt : std::optional<double>(s.get<double>());
  r.window_len = j.value("window_len", 0);
  const auto& t = j.at("truncated_candidate");
  r.truncated_candidate = t.is_null() ? std::nullopt : std::optional<Prompt>(t.get<Prompt>());
  j.at("append_candidate").get_to(r.append_candidate);
  j.at("candidate_scores").get_to(r.candidate_scores);
  j.at("chosen").get_to(r.chosen);
  r.chosen_kind = j.at("chosen_kind").get<std::string>() == "truncated" ? CandidateKind::kTruncated
                                                                        : CandidateKind::kAppend;
  r.user_override = j.value("user_override", false);
  r.notes = j.value("notes", std::vector<std::string>{});
}

}  // namespace promptsmith
