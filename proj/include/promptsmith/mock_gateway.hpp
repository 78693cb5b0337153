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

// Deterministic offline gateway over a 64-word fixture vocabulary.
//
// Text encoder: mean-pool the token embedding rows, then apply a fixed d x d
// linear map. Smooth in the inputs, so gradients can be checked by finite
// differences.
//
// Image encoder: the image is cut into d vertical stripes; feature j is the
// mean stripe intensity mapped to [-1, 1]. render_image() is its inverse up
// to scale, which lets tests build an image that "depicts" any text.
//
// Captioner: table-driven bigram generator biased toward words whose text
// embedding agrees with the image. Words never repeat within one caption.
//
// Perceptual metric: mean squared difference of 16x16 box-downsampled RGB.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptsmith/gateway.hpp"

namespace promptsmith::mock {

inline constexpr std::uint64_t kDefaultFixtureSeed = 7;
inline constexpr std::size_t kDefaultDim = 8;
inline constexpr std::size_t kFixtureVocabSize = 64;
inline constexpr int kDefaultCaptionTokens = 8;

const std::vector<std::string>& fixture_words();

struct MockFixture {
  std::vector<std::string> vocab;
  Matrix embeddings;
  std::size_t dim = kDefaultDim;
  std::uint64_t seed = kDefaultFixtureSeed;

  friend bool operator==(const MockFixture&, const MockFixture&) = default;
};

void to_json(json& j, const MockFixture& f);
void from_json(const json& j, MockFixture& f);

MockFixture generate_fixture(std::uint64_t seed, std::size_t dim = kDefaultDim);
MockFixture load_fixture(const std::filesystem::path& path);
void save_fixture(const MockFixture& f, const std::filesystem::path& path);

struct MockOptions {
  int caption_tokens = kDefaultCaptionTokens;
  DecodeMode mode = DecodeMode::kGreedy;
  std::optional<std::uint64_t> sample_seed;  // required when mode == kSample
  double temperature = 0.1;
};

class MockEncoder final : public TextImageEncoder {
 public:
  explicit MockEncoder(const MockFixture& fixture);

  const Tokenizer& tokenizer() const override { return vocab_; }
  std::size_t dim() const override { return dim_; }
  Embedding encode_text(const Prompt& prompt) const override;
  Embedding encode_image(const Image& image) const override;
  const Matrix& token_embedding_table() const override { return table_; }

  bool supports_embedding_input() const override { return true; }
  Embedding encode_embeddings(const Matrix& rows) const override;
  Matrix encode_embeddings_vjp(const Matrix& rows, std::span<const double> grad_out) const override;

  const Matrix& text_projection() const { return projection_; }
  const WordVocabulary& vocabulary() const { return vocab_; }

 private:
  WordVocabulary vocab_;
  std::size_t dim_;
  Matrix table_;
  Matrix projection_;
};

class MockCaptioner final : public Captioner {
 public:
  MockCaptioner(std::shared_ptr<const MockEncoder> encoder, std::uint64_t seed, MockOptions opts);

  const Tokenizer& tokenizer() const override { return vocab_; }
  Prompt generate(const Image& image) const override;
  Prompt continue_caption(const Image& image, const Prompt& prefix,
                          int max_new_tokens) const override;

  const MockOptions& options() const { return opts_; }

 private:
  std::vector<TokenId> extend(const Image& image, std::vector<TokenId> tokens, int budget,
                              std::uint64_t stream) const;

  std::shared_ptr<const MockEncoder> encoder_;
  WordVocabulary vocab_;
  MockOptions opts_;
  Matrix bigram_;  // (|V|+1) x (|V|+1); last row is BOS, last column is EOS.
  std::vector<Embedding> word_text_;
};

class MockPerceptualMetric final : public PerceptualMetric {
 public:
  std::string name() const override { return "mse16"; }
  double distance(const Image& a, const Image& b) const override;
};

Gateway mock_gateway(std::uint64_t seed, MockOptions opts = {});
Gateway mock_gateway(const MockFixture& fixture, MockOptions opts = {});

// Image whose mock image embedding points along target (up to 8-bit
// quantization). width must be at least target.dim().
Image render_image(const Embedding& target, int width = 64, int height = 64);

}  // namespace promptsmith::mock
