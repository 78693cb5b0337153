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

#include "promptsmith/gateway.hpp"

#include <map>
#include <mutex>

#include "promptsmith/errors.hpp"
#include "promptsmith/mock_gateway.hpp"
#include "promptsmith/remote_gateway.hpp"

namespace promptsmith {

Embedding TextImageEncoder::encode_embeddings(const Matrix&) const {
  throw CapabilityError("text encoder does not accept embedding input");
}

Matrix TextImageEncoder::encode_embeddings_vjp(const Matrix&, std::span<const double>) const {
  throw CapabilityError("text encoder does not accept embedding input");
}

Embedding TextImageEncoder::encode_words(std::span<const std::string> words) const {
  return encode_text(tokenizer().make_prompt(words));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ContractError("embedding dimensions differ: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine of a zero vector is undefined");
  return dot(a, b) / (na * nb);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values, b.values);
}

double clip_score(const Embedding& text_emb, const Embedding& image_emb) {
  return 100.0 * cosine_similarity(text_emb, image_emb);
}

double cosine_distance(const Embedding& a, const Embedding& b) {
  return 1.0 - cosine_similarity(a, b);
}

double text_similarity(std::span<const std::string> a, std::span<const std::string> b,
                       const TextImageEncoder& encoder) {
  if (a.empty() || b.empty()) throw PreconditionError("text_similarity needs non-empty words");
  return cosine_similarity(encoder.encode_words(a), encoder.encode_words(b));
}

double prompt_image_score(const TextImageEncoder& encoder, const Prompt& prompt,
                          const Embedding& image_emb) {
  return clip_score(encoder.encode_text(encoder.tokenizer().retokenize(prompt)), image_emb);
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, GatewayFactory>& registry() {
  static std::map<std::string, GatewayFactory> r;
  return r;
}

}  // namespace

void register_gateway_factory(const std::string& name, GatewayFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

Gateway make_gateway(const json& cfg) {
  const std::string backend = cfg.value("backend", "mock");
  if (backend == "mock") {
    const auto mock_cfg = cfg.value("mock", json::object());
    mock::MockOptions opts;
    opts.caption_tokens = mock_cfg.value("caption_tokens", opts.caption_tokens);
    const std::string fixture = mock_cfg.value("fixture", "");
    if (!fixture.empty()) return mock::mock_gateway(mock::load_fixture(fixture), opts);
    return mock::mock_gateway(mock_cfg.value("fixture_seed", mock::kDefaultFixtureSeed), opts);
  }
  if (backend == "clip_blip") {
    const auto remote_cfg = cfg.value("clip_blip", json::object());
    const std::string url = remote_cfg.value("url", "");
    if (url.empty()) throw ConfigError("gateway.clip_blip.url is required for the clip_blip backend");
    return remote::remote_gateway(url, remote_cfg.value("timeout_s", 300));
  }
  if (backend == "custom") {
    const std::string name = cfg.value("custom", json::object()).value("name", "");
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end())
      throw CapabilityError("no custom gateway registered under '" + name + "'");
    return it->second(cfg);
  }
  throw ConfigError("unknown gateway.backend '" + backend + "' (expected mock, clip_blip, custom)");
}

}  // namespace promptsmith
