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

// Grounds a bare source-attribute word in a full caption of the image.
//
// The captioner describes the image; the caption window most similar to the
// source attribute is taken as its synonym, replaced by the attribute, and
// everything after it is regenerated by the captioner conditioned on the
// image. A second candidate simply appends the attribute to the caption.
// Whichever candidate has the higher image-text score wins.

#include <optional>
#include <span>
#include <string>

#include "promptsmith/core.hpp"
#include "promptsmith/gateway.hpp"

namespace promptsmith::injector {

struct SynonymMatch {
  int index = 0;
  int window_len = 0;
  double similarity = 0.0;

  friend bool operator==(const SynonymMatch&, const SynonymMatch&) = default;
};

struct InjectorConfig {
  // Words the captioner may add after the truncated prefix. Unset means
  // (caption words - k + 4).
  std::optional<int> continuation_budget;
  // Forces the synonym window start instead of searching for it.
  std::optional<int> synonym_index_override;
};

// Slides a |source_attr|-word window over the caption words and returns the
// window most similar to the attribute; ties go to the smallest index.
// Throws PreconditionError on an empty caption, NoMatchError when the caption
// has fewer words than the attribute.
SynonymMatch find_synonym(const Prompt& caption, std::span<const std::string> source_attr,
                          const TextImageEncoder& encoder);

// Similarity of the window starting at index, for forced indices.
SynonymMatch match_at(const Prompt& caption, std::span<const std::string> source_attr, int index,
                      const TextImageEncoder& encoder);

// words[0, k) + source_attr, continued by the captioner. The attribute occurs
// once at position k; a continuation that repeats it is cut before the repeat.
Prompt build_truncated_candidate(const Image& image, const Prompt& caption,
                                 const SynonymMatch& match,
                                 std::span<const std::string> source_attr, const Captioner& captioner,
                                 std::optional<int> continuation_budget = std::nullopt);

// The caption with source_attr appended after its last word. If the caption
// already contains the attribute, that occurrence is removed first so the
// result holds it exactly once.
Prompt build_append_candidate(const Prompt& caption, std::span<const std::string> source_attr,
                              const Tokenizer& tokenizer);

InjectionReport inject(const Image& image, std::span<const std::string> source_attr,
                       const Gateway& gateway, const InjectorConfig& config = {});

// Same as inject() but starting from an already generated caption.
InjectionReport inject_with_caption(const Image& image, const Prompt& caption,
                                    std::span<const std::string> source_attr,
                                    const Gateway& gateway, const InjectorConfig& config = {});

}  // namespace promptsmith::injector
