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

// One layered configuration tree shared by the CLI and the service.
//
// Layers, lowest to highest precedence:
//   1. built-in defaults (defaults())
//   2. a JSON config file
//   3. environment variables PROMPTSMITH_<KEY>, where "__" separates levels:
//        PROMPTSMITH_OPTIMIZER__NUM_TOKENS=6  ->  optimizer.num_tokens = 6
//      values are parsed as JSON when they parse, else taken as strings
//   4. explicit overrides (command-line flags, "a.b.c" dotted paths)
//
// Objects merge key by key; any other value replaces what is below it.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "promptsmith/captioning_injector.hpp"
#include "promptsmith/core.hpp"
#include "promptsmith/edit_orchestrator.hpp"
#include "promptsmith/hard_prompt_optimizer.hpp"
#include "promptsmith/kernels.hpp"

namespace promptsmith::config {

inline constexpr std::string_view kEnvPrefix = "PROMPTSMITH_";

const json& defaults();

json load_file(const std::filesystem::path& path);

// Deep merge of overlay into base.
void merge(json& base, const json& overlay);

void set_path(json& tree, std::string_view dotted, json value);
// Null if any segment is missing.
json get_path(const json& tree, std::string_view dotted);

// Collects PROMPTSMITH_* entries from an environment listing.
json env_overrides(const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

// Dotted-path overrides ("optimizer.steps" -> 200).
using Overrides = std::map<std::string, json>;

json resolve(const std::optional<std::filesystem::path>& file,
             const std::map<std::string, std::string>& env, const Overrides& overrides);

optimizer::OptimizerConfig optimizer_config(const json& cfg);
injector::InjectorConfig injector_config(const json& cfg);
edit::SamplerConfig sampler_config(const json& cfg);
kernels::Exec exec_mode(const json& cfg);

}  // namespace promptsmith::config
