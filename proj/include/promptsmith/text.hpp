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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptsmith::text {

using Words = std::vector<std::string>;

// Splits on ASCII whitespace; empty fields are dropped.
Words split_words(std::string_view s);

std::string join_words(std::span<const std::string> words);

std::string to_lower(std::string_view s);

// Lowercases and strips leading/trailing punctuation ("Dish." -> "dish").
std::string normalize_word(std::string_view w);

Words normalized_words(std::string_view s);

// Start indices of every (possibly overlapping) occurrence of needle in
// haystack. An empty needle never matches.
std::vector<std::size_t> find_all(std::span<const std::string> haystack,
                                  std::span<const std::string> needle);

std::size_t count_occurrences(std::span<const std::string> haystack,
                              std::span<const std::string> needle);

// Left-to-right, non-overlapping replacement of every occurrence.
Words replace_all(std::span<const std::string> haystack,
                  std::span<const std::string> needle,
                  std::span<const std::string> replacement);

// Removes every non-overlapping occurrence of needle.
Words remove_all(std::span<const std::string> haystack,
                 std::span<const std::string> needle);

}  // namespace promptsmith::text
