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

// Uniform interface over the external models the pipeline consumes: a joint
// text-image encoder, an image captioner, and a perceptual image metric.
// Implementations are read-only after construction and must tolerate
// concurrent calls.

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "promptsmith/core.hpp"
#include "promptsmith/image.hpp"
#include "promptsmith/matrix.hpp"
#include "promptsmith/tokenizer.hpp"

namespace promptsmith {

class TextImageEncoder {
 public:
  virtual ~TextImageEncoder() = default;

  virtual const Tokenizer& tokenizer() const = 0;
  virtual std::size_t dim() const = 0;

  // prompt.vocab_id must match tokenizer().id(); otherwise VocabularyError.
  virtual Embedding encode_text(const Prompt& prompt) const = 0;
  virtual Embedding encode_image(const Image& image) const = 0;

  // |V| x d look-up matrix.
  virtual const Matrix& token_embedding_table() const = 0;

  // Text encoding straight from a sequence of token embeddings, and the
  // vector-Jacobian product of that map. Optional; the defaults throw
  // CapabilityError.
  virtual bool supports_embedding_input() const { return false; }
  virtual Embedding encode_embeddings(const Matrix& rows) const;
  virtual Matrix encode_embeddings_vjp(const Matrix& rows, std::span<const double> grad_out) const;

  std::size_t vocab_size() const { return tokenizer().size(); }
  Embedding encode_words(std::span<const std::string> words) const;
};

enum class DecodeMode { kGreedy, kSample };

class Captioner {
 public:
  virtual ~Captioner() = default;

  virtual const Tokenizer& tokenizer() const = 0;

  virtual Prompt generate(const Image& image) const = 0;

  // Result tokens always begin with prefix.tokens; at most max_new_tokens
  // are added.
  virtual Prompt continue_caption(const Image& image, const Prompt& prefix,
                                  int max_new_tokens) const = 0;
};

class PerceptualMetric {
 public:
  virtual ~PerceptualMetric() = default;
  virtual std::string name() const = 0;
  // Non-negative; zero for identical images; symmetric.
  virtual double distance(const Image& a, const Image& b) const = 0;
};

struct Gateway {
  std::string backend;
  std::shared_ptr<const TextImageEncoder> encoder;
  std::shared_ptr<const Captioner> captioner;
  std::shared_ptr<const PerceptualMetric> metric;
  json metadata;
};

// Throws ContractError on a dimension mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const Embedding& a, const Embedding& b);

// 100 x cosine similarity, not clamped at zero.
double clip_score(const Embedding& text_emb, const Embedding& image_emb);

// 1 - cosine similarity, in [0, 2].
double cosine_distance(const Embedding& a, const Embedding& b);

// Cosine similarity of the two word sequences encoded as standalone prompts.
double text_similarity(std::span<const std::string> a, std::span<const std::string> b,
                       const TextImageEncoder& encoder);

// clip_score of a prompt (re-expressed in the encoder's vocabulary) against an
// image embedding.
double prompt_image_score(const TextImageEncoder& encoder, const Prompt& prompt,
                          const Embedding& image_emb);

using GatewayFactory = std::function<Gateway(const json& config)>;

// Named factories for gateway.backend values other than the built-ins.
void register_gateway_factory(const std::string& name, GatewayFactory factory);

// Builds a gateway from the "gateway" config subtree:
//   backend: mock | clip_blip | custom
//   mock:      fixture (path, optional), fixture_seed, caption_tokens
//   clip_blip: url
//   custom:    name (a registered factory)
Gateway make_gateway(const json& gateway_config);

}  // namespace promptsmith
