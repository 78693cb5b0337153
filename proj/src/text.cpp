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

#include "promptsmith/text.hpp"

#include <algorithm>
#include <cctype>

namespace promptsmith::text {

Words split_words(std::string_view s) {
  Words out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalize_word(std::string_view w) {
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = w.size();
  while (b < e && is_punct(w[b])) ++b;
  while (e > b && is_punct(w[e - 1])) --e;
  return to_lower(w.substr(b, e - b));
}

Words normalized_words(std::string_view s) {
  Words out;
  for (auto& w : split_words(s)) {
    auto n = normalize_word(w);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

std::vector<std::size_t> find_all(std::span<const std::string> haystack,
                                  std::span<const std::string> needle) {
  std::vector<std::size_t> hits;
  if (needle.empty() || needle.size() > haystack.size()) return hits;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) hits.push_back(i);
  }
  return hits;
}

std::size_t count_occurrences(std::span<const std::string> haystack,
                              std::span<const std::string> needle) {
  return find_all(haystack, needle).size();
}

Words replace_all(std::span<const std::string> haystack,
                  std::span<const std::string> needle,
                  std::span<const std::string> replacement) {
  Words out;
  std::size_t i = 0;
  while (i < haystack.size()) {
    if (!needle.empty() && i + needle.size() <= haystack.size() &&
        std::equal(needle.begin(), needle.end(), haystack.begin() + i)) {
      out.insert(out.end(), replacement.begin(), replacement.end());
      i += needle.size();
    } else {
      out.push_back(haystack[i++]);
    }
  }
  return out;
}

Words remove_all(std::span<const std::string> haystack,
                 std::span<const std::string> needle) {
  return replace_all(haystack, needle, {});
}

}  // namespace promptsmith::text
