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

#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "promptsmith/core.hpp"
#include "promptsmith/gateway.hpp"
#include "promptsmith/image.hpp"

namespace promptsmith::edit {

// Diffusion sampler settings handed to every backend. Defaults follow the
// standard Stable Diffusion editing protocol: 50 DDIM steps, guidance 7.5,
// 512x512 pixels over a 64x64 latent.
struct SamplerConfig {
  int ddim_steps = 50;
  double guidance = 7.5;
  int resolution = 512;
  int latent_resolution = 64;
  // SDEdit noise strength as a fraction of the schedule. Unset with
  // sdedit_auto false means "backend default".
  std::optional<double> sdedit_t;
  bool sdedit_auto = false;
  std::vector<double> sdedit_grid = {0.3, 0.5, 0.7};
  std::uint64_t seed = 0;

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct EditJob {
  Image image;
  Prompt source_prompt;
  Prompt edited_prompt;
  std::string backend_id;
  SamplerConfig sampler;

  friend bool operator==(const EditJob&, const EditJob&) = default;
};

struct EditResult {
  Image output;
  EditJob job;
  json backend_metadata;
  double wall_time = 0.0;
};

struct BackendOutput {
  Image image;
  json metadata = json::object();
};

struct AttentionMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

// A diffusion editing framework behind a narrow interface.
class EditBackend {
 public:
  virtual ~EditBackend() = default;
  virtual std::string id() const = 0;
  virtual BackendOutput run(const Image& image, const Prompt& source, const Prompt& edited,
                            const SamplerConfig& sampler) const = 0;
  // Cross-attention map for one token of the last run, when the backend can
  // expose it.
  virtual std::optional<AttentionMap> attention_map(const std::string& /*token*/) const {
    return std::nullopt;
  }
};

// Returns its input unchanged.
class IdentityBackend final : public EditBackend {
 public:
  std::string id() const override { return "identity"; }
  BackendOutput run(const Image& image, const Prompt&, const Prompt&,
                    const SamplerConfig&) const override;
};

// Blends the input toward a rendering of the edited prompt. The blend weight
// is t * (1 - cos(source, edited)) / 2 with t = sdedit_t (default 0.5), and
// a +-0.5 level dither drawn from sampler.seed.
class MockBlendBackend final : public EditBackend {
 public:
  explicit MockBlendBackend(std::shared_ptr<const TextImageEncoder> encoder)
      : encoder_(std::move(encoder)) {}
  std::string id() const override { return "mock_blend"; }
  BackendOutput run(const Image& image, const Prompt& source, const Prompt& edited,
                    const SamplerConfig& sampler) const override;

 private:
  std::shared_ptr<const TextImageEncoder> encoder_;
};

// Thin adapter around an external editing program (an SDEdit,
// Prompt-to-Prompt or Null-text Inversion script). The program is invoked as
// `<entrypoint> <job.json>`; job.json holds input_path, output_path,
// source_prompt, edited_prompt and sampler. It must write output_path (PNG)
// and may write metadata_path (JSON).
class CommandBackend final : public EditBackend {
 public:
  CommandBackend(std::string id, std::string entrypoint)
      : id_(std::move(id)), entrypoint_(std::move(entrypoint)) {}
  std::string id() const override { return id_; }
  BackendOutput run(const Image& image, const Prompt& source, const Prompt& edited,
                    const SamplerConfig& sampler) const override;

 private:
  std::string id_;
  std::string entrypoint_;
};

class BackendRegistry {
 public:
  void add(std::shared_ptr<const EditBackend> backend);
  bool contains(const std::string& id) const { return backends_.contains(id); }
  // Throws CapabilityError for an unregistered id.
  const EditBackend& get(const std::string& id) const;
  std::vector<std::string> ids() const;

  // identity and mock_blend, plus one CommandBackend per
  // backends.<id>.entrypoint entry in config.
  static BackendRegistry with_builtins(const Gateway& gateway, const json& backends_config = {});

 private:
  std::map<std::string, std::shared_ptr<const EditBackend>> backends_;
};

// Replaces every occurrence of pair.source with pair.target (word level,
// normalized). Throws ContractError if the source attribute is absent.
Prompt build_edited_prompt(const Prompt& source_prompt, const AttributePair& pair,
                           const Tokenizer& tokenizer);

// One Noun: the content words (articles dropped) are exactly one side of the
// pair. Full Description: the prompt reads as a sentence, i.e. it has a verb
// or a relational word (preposition, conjunction). Full Nouns otherwise.
PromptLevel classify_level(const Prompt& prompt, const AttributePair& pair);
PromptLevel classify_level(std::string_view prompt_text, const AttributePair& pair);

bool is_sentence_word(std::string_view normalized_word);

// Runs a job through its backend. The input is resized to the sampler
// resolution first. With sampler.sdedit_auto, every t in sdedit_grid is tried
// and the output with the highest clip score against the edited prompt is
// kept (ties go to the earlier grid entry); this needs an encoder.
EditResult run_edit(const EditJob& job, const BackendRegistry& registry,
                    const TextImageEncoder* scorer = nullptr);

// Caps the number of backend invocations in flight across threads.
class EditScheduler {
 public:
  explicit EditScheduler(int pool_size = 1);
  EditResult run(const EditJob& job, const BackendRegistry& registry,
                 const TextImageEncoder* scorer = nullptr);
  int pool_size() const { return pool_size_; }

 private:
  int pool_size_;
  std::counting_semaphore<> slots_;
};

void to_json(json& j, const SamplerConfig& c);
void from_json(const json& j, SamplerConfig& c);
// Images are not embedded; callers store them separately.
void to_json(json& j, const EditJob& job);
void to_json(json& j, const EditResult& r);

}  // namespace promptsmith::edit
