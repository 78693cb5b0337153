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

#include "promptsmith/config.hpp"

#include <cctype>
#include <fstream>

#include "promptsmith/errors.hpp"

extern char** environ;

namespace promptsmith::config {

const json& defaults() {
  static const json d = json::parse(R"({
    "seed": 0,
    "exec": "parallel",
    "out_dir": "promptsmith-out",
    "gateway": {
      "backend": "mock",
      "mock": {"fixture": "", "fixture_seed": 7, "caption_tokens": 8},
      "clip_blip": {"url": "", "timeout_s": 300}
    },
    "injector": {"continuation_budget": null},
    "optimizer": {"num_tokens": 4, "steps": 1000, "learning_rate": 0.1, "location": "end"},
    "sampler": {
      "ddim_steps": 50, "guidance": 7.5, "resolution": 512, "latent_resolution": 64,
      "sdedit_t": null, "sdedit_grid": [0.3, 0.5, 0.7]
    },
    "edit": {"backend": "mock_blend", "pool_size": 1},
    "backends": {},
    "service": {"host": "127.0.0.1", "port": 8080, "queue_depth": 4, "data_dir": "promptsmith-data"}
  })");
  return d;
}

json load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ConfigError("config file '" + path.string() + "' must hold an object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
}

void merge(json& base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [k, v] : overlay.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object())
      merge(base[k], v);
    else
      base[k] = v;
  }
}

namespace {

std::vector<std::string> split_path(std::string_view dotted, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = dotted.find(sep, pos);
    out.emplace_back(dotted.substr(pos, hit == std::string_view::npos ? std::string_view::npos : hit - pos));
    if (hit == std::string_view::npos) break;
    pos = hit + sep.size();
  }
  for (const auto& s : out)
    if (s.empty()) throw ConfigError("malformed config key '" + std::string(dotted) + "'");
  return out;
}

void set_segments(json& tree, const std::vector<std::string>& segs, json value) {
  json* node = &tree;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (!node->is_object()) *node = json::object();
    node = &(*node)[segs[i]];
  }
  if (!node->is_object()) *node = json::object();
  (*node)[segs.back()] = std::move(value);
}

}  // namespace

void set_path(json& tree, std::string_view dotted, json value) {
  set_segments(tree, split_path(dotted, "."), std::move(value));
}

json get_path(const json& tree, std::string_view dotted) {
  const json* node = &tree;
  for (const auto& seg : split_path(dotted, ".")) {
    if (!node->is_object() || !node->contains(seg)) return nullptr;
    node = &node->at(seg);
  }
  return *node;
}

json env_overrides(const std::map<std::string, std::string>& env) {
  json out = json::object();
  for (const auto& [name, raw] : env) {
    if (!name.starts_with(kEnvPrefix) || name.size() == kEnvPrefix.size()) continue;
    std::string key = name.substr(kEnvPrefix.size());
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_segments(out, split_path(key, "__"), std::move(value));
  }
  return out;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    if (!kv.starts_with(kEnvPrefix)) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

json resolve(const std::optional<std::filesystem::path>& file,
             const std::map<std::string, std::string>& env, const Overrides& overrides) {
  json cfg = defaults();
  if (file) merge(cfg, load_file(*file));
  merge(cfg, env_overrides(env));
  for (const auto& [k, v] : overrides) set_path(cfg, k, v);
  return cfg;
}

namespace {

template <typename T>
T read(const json& cfg, std::string_view dotted) {
  const json v = get_path(cfg, dotted);
  if (v.is_null()) return get_path(defaults(), dotted).get<T>();
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + std::string(dotted) + "' has the wrong type");
  }
}

}  // namespace

optimizer::OptimizerConfig optimizer_config(const json& cfg) {
  optimizer::OptimizerConfig c;
  c.num_tokens = read<int>(cfg, "optimizer.num_tokens");
  c.steps = read<int>(cfg, "optimizer.steps");
  c.learning_rate = read<double>(cfg, "optimizer.learning_rate");
  c.location = optimizer::location_from_string(read<std::string>(cfg, "optimizer.location"));
  c.seed = read<std::uint64_t>(cfg, "seed");
  c.validate();
  return c;
}

injector::InjectorConfig injector_config(const json& cfg) {
  injector::InjectorConfig c;
  const json budget = get_path(cfg, "injector.continuation_budget");
  if (budget.is_number_integer()) {
    c.continuation_budget = budget.get<int>();
    if (*c.continuation_budget < 0) throw ConfigError("injector.continuation_budget must be >= 0");
  }
  return c;
}

edit::SamplerConfig sampler_config(const json& cfg) {
  json merged = get_path(defaults(), "sampler");
  merge(merged, get_path(cfg, "sampler").is_object() ? get_path(cfg, "sampler") : json::object());
  edit::SamplerConfig c = merged.get<edit::SamplerConfig>();
  c.seed = read<std::uint64_t>(cfg, "seed");
  if (c.ddim_steps < 1) throw ConfigError("sampler.ddim_steps must be >= 1");
  if (c.resolution < 8) throw ConfigError("sampler.resolution must be >= 8");
  if (c.sdedit_t && (*c.sdedit_t <= 0.0 || *c.sdedit_t > 1.0))
    throw ConfigError("sampler.sdedit_t must lie in (0, 1]");
  return c;
}

kernels::Exec exec_mode(const json& cfg) {
  const auto s = read<std::string>(cfg, "exec");
  if (s == "parallel") return kernels::Exec::kParallel;
  if (s == "serial") return kernels::Exec::kSerial;
  throw ConfigError("exec must be serial or parallel");
}

}  // namespace promptsmith::config
