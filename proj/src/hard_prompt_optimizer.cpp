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

#include "promptsmith/hard_prompt_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "promptsmith/errors.hpp"
#include "promptsmith/random.hpp"

namespace promptsmith::optimizer {

std::string_view to_string(InjectionLocation loc) {
  switch (loc) {
    case InjectionLocation::kStart: return "start";
    case InjectionLocation::kMiddle: return "middle";
    case InjectionLocation::kEnd: return "end";
  }
  return "end";
}

InjectionLocation location_from_string(std::string_view s) {
  if (s == "start") return InjectionLocation::kStart;
  if (s == "middle") return InjectionLocation::kMiddle;
  if (s == "end") return InjectionLocation::kEnd;
  throw ConfigError("unknown injection location '" + std::string(s) +
                    "' (expected start, middle, end)");
}

void OptimizerConfig::validate(bool allow_zero_rate) const {
  if (num_tokens < 1) throw ConfigError("num_tokens must be at least 1");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0 ||
      (learning_rate == 0.0 && !allow_zero_rate))
    throw ConfigError("learning_rate must be positive");
}

int attribute_offset(InjectionLocation loc, int num_tokens, int attribute_tokens) {
  switch (loc) {
    case InjectionLocation::kStart: return 0;
    case InjectionLocation::kMiddle: return std::min(num_tokens / 2, num_tokens - attribute_tokens);
    case InjectionLocation::kEnd: return num_tokens - attribute_tokens;
  }
  return num_tokens - attribute_tokens;
}

HardPromptOptimizer::HardPromptOptimizer(const TextImageEncoder& encoder, OptimizerConfig config,
                                         kernels::Exec exec)
    : encoder_(encoder), config_(config), exec_(exec) {
  config_.validate(/*allow_zero_rate=*/true);
  if (!encoder_.supports_embedding_input())
    throw CapabilityError("hard-prompt optimization needs a text encoder that accepts embeddings");
  vocab_ = kernels::VocabIndex(encoder_.token_embedding_table());
  if (vocab_.size() < 2) throw PreconditionError("embedding table needs at least two rows");
  if (!vocab_.table().all_finite()) throw PreconditionError("embedding table has non-finite entries");
}

SoftPromptState HardPromptOptimizer::init_state(std::span<const std::string> source_attr) const {
  if (source_attr.empty()) throw PreconditionError("source attribute is empty");
  const auto attr_tokens = encoder_.tokenizer().tokenize(text::join_words(source_attr));
  const int m = config_.num_tokens;
  const int t = static_cast<int>(attr_tokens.size());
  if (t == 0) throw VocabularyError("source attribute produced no tokens");
  if (m < 1 + t)
    throw ConfigError("source attribute needs " + std::to_string(t) + " tokens but num_tokens=" +
                      std::to_string(m) + " leaves no free position");

  const std::size_t d = vocab_.dim();
  SoftPromptState state;
  state.embeddings = Matrix(static_cast<std::size_t>(m), d);
  state.frozen_mask.assign(static_cast<std::size_t>(m), false);
  state.frozen_tokens.assign(static_cast<std::size_t>(m), -1);

  const int offset = attribute_offset(config_.location, m, t);
  for (int i = 0; i < t; ++i) {
    const auto r = static_cast<std::size_t>(offset + i);
    state.frozen_mask[r] = true;
    state.frozen_tokens[r] = attr_tokens[static_cast<std::size_t>(i)];
  }

  Rng rng(config_.seed);
  for (std::size_t r = 0; r < state.embeddings.rows(); ++r) {
    const auto id = state.frozen_mask[r] ? static_cast<std::size_t>(state.frozen_tokens[r])
                                         : static_cast<std::size_t>(rng.index(vocab_.size()));
    const auto src = vocab_.table().row(id);
    std::copy(src.begin(), src.end(), state.embeddings.row(r).begin());
  }
  return state;
}

Projection HardPromptOptimizer::project(const Matrix& rows,
                                        std::span<const TokenId> frozen_tokens) const {
  Projection out;
  out.ids = kernels::nearest_cosine(rows, vocab_, exec_);
  for (std::size_t r = 0; r < out.ids.size(); ++r)
    if (r < frozen_tokens.size() && frozen_tokens[r] >= 0) out.ids[r] = frozen_tokens[r];
  out.rows = Matrix(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < out.ids.size(); ++r) {
    const auto src = vocab_.table().row(static_cast<std::size_t>(out.ids[r]));
    std::copy(src.begin(), src.end(), out.rows.row(r).begin());
  }
  return out;
}

Projection HardPromptOptimizer::project(const SoftPromptState& state) const {
  return project(state.embeddings, state.frozen_tokens);
}

double HardPromptOptimizer::loss(const Matrix& projected, const Embedding& image_emb) const {
  return cosine_distance(encoder_.encode_embeddings(projected), image_emb);
}

LossAndGradient HardPromptOptimizer::loss_and_gradient(const Matrix& projected,
                                                       const Embedding& image_emb) const {
  const Embedding text = encoder_.encode_embeddings(projected);
  const auto& t = text.values;
  const auto& v = image_emb.values;
  if (t.size() != v.size()) throw ContractError("text and image embeddings differ in dimension");
  const double nt = l2_norm(t);
  const double ni = l2_norm(v);
  if (nt == 0.0 || ni == 0.0) throw NumericError("zero embedding: cosine loss is undefined");
  const double cos = dot(t, v) / (nt * ni);

  // L = 1 - cos(t, v);  dL/dt = -(v / (|t||v|) - cos * t / |t|^2)
  std::vector<double> grad_t(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    grad_t[i] = -(v[i] / (nt * ni) - cos * t[i] / (nt * nt));

  return LossAndGradient{1.0 - cos, encoder_.encode_embeddings_vjp(projected, grad_t)};
}

TraceRecord HardPromptOptimizer::step(SoftPromptState& state, const Embedding& image_emb) const {
  const Projection proj = project(state);
  LossAndGradient lg = loss_and_gradient(proj.rows, image_emb);

  if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
    std::ostringstream msg;
    msg << "non-finite loss or gradient at step " << state.step_count << " (loss=" << lg.loss
        << ")";
    throw NumericError(msg.str());
  }

  const double rate = config_.learning_rate;
  for (std::size_t r = 0; r < state.embeddings.rows(); ++r) {
    if (state.frozen_mask[r]) continue;  // gradient forced to zero
    auto row = state.embeddings.row(r);
    const auto g = lg.grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= rate * g[c];
  }

  Prompt decoded = encoder_.tokenizer().from_tokens(proj.ids);
  const double score = clip_score(encoder_.encode_text(decoded), image_emb);

  TraceRecord rec{state.step_count, lg.loss, score, decoded.text, proj.ids};
  if (score > state.best_score) {
    state.best_score = score;
    state.best_prompt = std::move(decoded);
  }
  ++state.step_count;
  return rec;
}

OptimizeResult HardPromptOptimizer::optimize(const Image& image,
                                             std::span<const std::string> source_attr) const {
  config_.validate();
  const Embedding image_emb = encoder_.encode_image(image);
  OptimizeResult result;
  result.state = init_state(source_attr);
  result.trace.reserve(static_cast<std::size_t>(config_.steps));
  for (int s = 0; s < config_.steps; ++s) {
    try {
      result.trace.push_back(step(result.state, image_emb));
    } catch (const Error& e) {
      throw OptimizationError(e.what(), std::move(result.trace));
    }
  }
  result.prompt = result.state.best_prompt;
  result.score = result.state.best_score;
  return result;
}

void to_json(json& j, const TraceRecord& r) {
  j = json{{"step", r.step},
           {"loss", r.loss},
           {"score", r.score},
           {"prompt", r.prompt},
           {"tokens", r.tokens}};
}

void write_trace_jsonl(std::span<const TraceRecord> trace, std::ostream& out) {
  for (const auto& r : trace) out << json(r).dump() << '\n';
}

}  // namespace promptsmith::optimizer
