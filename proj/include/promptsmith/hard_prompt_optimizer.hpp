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

// Hard-prompt optimization with a pinned source attribute.
//
// A sequence of M soft token embeddings is optimized to maximize the
// image-text score. Each step projects the soft rows onto their nearest
// vocabulary rows (cosine), evaluates the cosine-distance loss on the
// projected prompt, and applies the gradient taken at the projection to the
// soft rows. Rows holding the source attribute have their gradient forced to
// zero, so the attribute survives every step. The best decoded prompt seen
// during the run is returned.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "promptsmith/core.hpp"
#include "promptsmith/errors.hpp"
#include "promptsmith/gateway.hpp"
#include "promptsmith/kernels.hpp"
#include "promptsmith/matrix.hpp"

namespace promptsmith::optimizer {

enum class InjectionLocation { kStart, kMiddle, kEnd };

std::string_view to_string(InjectionLocation loc);
InjectionLocation location_from_string(std::string_view s);

struct OptimizerConfig {
  int num_tokens = 4;
  int steps = 1000;
  double learning_rate = 0.1;
  InjectionLocation location = InjectionLocation::kEnd;
  std::uint64_t seed = 0;

  // Throws ConfigError on num_tokens < 1, steps < 1 or a non-positive rate.
  // The rate may be zero only when allow_zero_rate is set (a test hook).
  void validate(bool allow_zero_rate = false) const;
};

struct SoftPromptState {
  Matrix embeddings;
  std::vector<bool> frozen_mask;
  std::vector<TokenId> frozen_tokens;  // vocabulary id per frozen row, -1 elsewhere
  Prompt best_prompt;
  double best_score = -INFINITY;
  int step_count = 0;
};

struct Projection {
  Matrix rows;
  std::vector<TokenId> ids;
};

struct LossAndGradient {
  double loss = 0.0;
  Matrix grad;
};

struct TraceRecord {
  int step = 0;
  double loss = 0.0;
  double score = 0.0;
  std::string prompt;
  std::vector<TokenId> tokens;
};

struct OptimizeResult {
  Prompt prompt;
  double score = 0.0;
  std::vector<TraceRecord> trace;
  SoftPromptState state;
};

// Raised when a step fails; carries every record completed before it.
class OptimizationError : public NumericError {
 public:
  OptimizationError(const std::string& what, std::vector<TraceRecord> partial)
      : NumericError(what), partial_trace(std::move(partial)) {}
  std::vector<TraceRecord> partial_trace;
};

// Start index of the attribute rows inside an M-row prompt. Middle is M/2,
// pulled left if the attribute would overflow the end.
int attribute_offset(InjectionLocation loc, int num_tokens, int attribute_tokens);

class HardPromptOptimizer {
 public:
  // Throws CapabilityError if the encoder cannot encode embedding input.
  HardPromptOptimizer(const TextImageEncoder& encoder, OptimizerConfig config,
                      kernels::Exec exec = kernels::Exec::kParallel);

  const OptimizerConfig& config() const { return config_; }
  const kernels::VocabIndex& vocab() const { return vocab_; }

  SoftPromptState init_state(std::span<const std::string> source_attr) const;

  // Nearest vocabulary row per soft row; frozen rows map to their own token.
  Projection project(const SoftPromptState& state) const;
  Projection project(const Matrix& rows, std::span<const TokenId> frozen_tokens) const;

  double loss(const Matrix& projected, const Embedding& image_emb) const;
  LossAndGradient loss_and_gradient(const Matrix& projected, const Embedding& image_emb) const;

  TraceRecord step(SoftPromptState& state, const Embedding& image_emb) const;

  OptimizeResult optimize(const Image& image, std::span<const std::string> source_attr) const;

 private:
  const TextImageEncoder& encoder_;
  OptimizerConfig config_;
  kernels::Exec exec_;
  kernels::VocabIndex vocab_;
};

void to_json(json& j, const TraceRecord& r);
void write_trace_jsonl(std::span<const TraceRecord> trace, std::ostream& out);

}  // namespace promptsmith::optimizer
