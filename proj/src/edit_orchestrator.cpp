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

#include "promptsmith/edit_orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include "promptsmith/errors.hpp"
#include "promptsmith/mock_gateway.hpp"
#include "promptsmith/random.hpp"

namespace promptsmith::edit {

namespace fs = std::filesystem;

BackendOutput IdentityBackend::run(const Image& image, const Prompt&, const Prompt&,
                                   const SamplerConfig&) const {
  return {image, json{{"backend", "identity"}}};
}

BackendOutput MockBlendBackend::run(const Image& image, const Prompt& source, const Prompt& edited,
                                    const SamplerConfig& sampler) const {
  const auto& tok = encoder_->tokenizer();
  const Embedding src = encoder_->encode_text(tok.retokenize(source));
  const Embedding dst = encoder_->encode_text(tok.retokenize(edited));
  const double t = sampler.sdedit_t.value_or(0.5);
  const double alpha = t * (1.0 - cosine_similarity(src, dst)) / 2.0;
  const Image target = mock::render_image(dst, image.width, image.height);

  Rng rng(sampler.seed);
  Image out(image.width, image.height);
  for (std::size_t i = 0; i < out.rgb.size(); ++i) {
    const double v = (1.0 - alpha) * image.rgb[i] + alpha * target.rgb[i] + (rng.uniform() - 0.5);
    out.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return {std::move(out), json{{"backend", "mock_blend"}, {"alpha", alpha}, {"t", t}}};
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out.push_back(c);
  }
  return out + "'";
}

fs::path make_job_dir() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  const auto name = "promptsmith-job-" + std::to_string(rd()) + "-" + std::to_string(counter++);
  fs::path dir = fs::temp_directory_path() / name;
  fs::create_directories(dir);
  return dir;
}

}  // namespace

BackendOutput CommandBackend::run(const Image& image, const Prompt& source, const Prompt& edited,
                                  const SamplerConfig& sampler) const {
  const fs::path dir = make_job_dir();
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  const fs::path input = dir / "input.png";
  const fs::path output = dir / "output.png";
  const fs::path meta = dir / "metadata.json";
  const fs::path job_file = dir / "job.json";
  write_png(image, input);
  {
    std::ofstream out(job_file);
    out << json{{"backend", id_},
                {"input_path", input.string()},
                {"output_path", output.string()},
                {"metadata_path", meta.string()},
                {"source_prompt", source.text},
                {"edited_prompt", edited.text},
                {"sampler", sampler}}
               .dump(2);
  }
  const std::string cmd = entrypoint_ + " " + shell_quote(job_file.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw BackendError("backend '" + id_ + "' entrypoint exited with status " + std::to_string(rc));
  if (!fs::exists(output)) throw BackendError("backend '" + id_ + "' produced no output image");

  BackendOutput result{read_png(output), json{{"backend", id_}, {"entrypoint", entrypoint_}}};
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    result.metadata["reported"] = json::parse(in, nullptr, false);
  }
  return result;
}

// ---------------------------------------------------------------------------

void BackendRegistry::add(std::shared_ptr<const EditBackend> backend) {
  const std::string id = backend->id();
  backends_[id] = std::move(backend);
}

const EditBackend& BackendRegistry::get(const std::string& id) const {
  auto it = backends_.find(id);
  if (it == backends_.end()) {
    std::string known;
    for (const auto& [k, _] : backends_) known += (known.empty() ? "" : ", ") + k;
    throw CapabilityError("editing backend '" + id + "' is not registered (available: " + known +
                          ")");
  }
  return *it->second;
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : backends_) out.push_back(k);
  return out;
}

BackendRegistry BackendRegistry::with_builtins(const Gateway& gateway, const json& backends_config) {
  BackendRegistry reg;
  reg.add(std::make_shared<IdentityBackend>());
  reg.add(std::make_shared<MockBlendBackend>(gateway.encoder));
  if (backends_config.is_object()) {
    for (const auto& [id, entry] : backends_config.items()) {
      if (!entry.is_object() || !entry.contains("entrypoint")) continue;
      const std::string ep = entry.at("entrypoint").get<std::string>();
      if (!ep.empty()) reg.add(std::make_shared<CommandBackend>(id, ep));
    }
  }
  return reg;
}

// ---------------------------------------------------------------------------

Prompt build_edited_prompt(const Prompt& source_prompt, const AttributePair& pair,
                           const Tokenizer& tokenizer) {
  pair.validate();
  const auto words = text::normalized_words(source_prompt.text);
  if (text::count_occurrences(words, pair.source) == 0)
    throw ContractError("source attribute '" + text::join_words(pair.source) +
                        "' does not occur in prompt '" + source_prompt.text +
                        "'; inject it into the prompt first");
  return tokenizer.make_prompt(text::replace_all(words, pair.source, pair.target));
}

namespace {

const std::unordered_set<std::string>& articles() {
  static const std::unordered_set<std::string> s = {"a", "an", "the"};
  return s;
}

// Closed-class words whose presence makes a prompt read as a sentence.
const std::unordered_set<std::string>& relational_words() {
  static const std::unordered_set<std::string> s = {
      "on",     "in",      "at",     "with",   "under",   "over",    "near",  "beside",
      "behind", "of",      "by",     "from",   "into",    "onto",    "and",   "while",
      "next",   "above",   "below",  "inside", "through", "across",  "along", "against",
      "around", "between", "beneath", "atop",  "toward",  "towards", "among", "during",
      "or",     "but",     "that",   "which",  "who",     "to"};
  return s;
}

const std::unordered_set<std::string>& verb_words() {
  static const std::unordered_set<std::string> s = {
      "is",    "are",   "was",   "were",  "be",    "been",  "being", "has",   "have",  "had",
      "does",  "do",    "did",   "sits",  "sit",   "sat",   "stands", "stand", "stood", "wears",
      "wear",  "wore",  "holds", "hold",  "held",  "rides", "ride",  "rode",  "eats",  "eat",
      "ate",   "runs",  "run",   "ran",   "lies",  "lie",   "lay",   "looks", "look",  "plays",
      "play",  "flies", "fly",   "walks", "walk",  "jumps", "jump",  "swims", "swim",  "drinks",
      "drink", "sleeps", "sleep", "carries", "carry", "shows", "show", "contains", "contain",
      "made",  "filled", "covered", "parked"};
  return s;
}

// -ing / -ed words that are nouns or adjectives, not verbs.
const std::unordered_set<std::string>& suffix_exceptions() {
  static const std::unordered_set<std::string> s = {
      "building", "ceiling", "clothing", "thing",   "string",  "spring", "morning", "evening",
      "ring",     "king",    "wing",     "sibling", "pudding", "stuffing", "icing", "painting",
      "bedding",  "wedding", "railing",  "awning",  "hundred", "speed",  "seed",    "breed",
      "steed",    "sled",    "shed",     "bed",     "red",     "seabed", "flowerbed", "bred"};
  return s;
}

}  // namespace

bool is_sentence_word(std::string_view word) {
  const std::string w(word);
  if (relational_words().contains(w) || verb_words().contains(w)) return true;
  if (suffix_exceptions().contains(w)) return false;
  if (w.size() >= 5 && w.ends_with("ing")) return true;
  if (w.size() >= 5 && w.ends_with("ed")) return true;
  return false;
}

PromptLevel classify_level(std::string_view prompt_text, const AttributePair& pair) {
  text::Words content;
  for (auto& w : text::normalized_words(prompt_text))
    if (!articles().contains(w)) content.push_back(std::move(w));

  auto strip = [](const text::Words& ws) {
    text::Words out;
    for (const auto& w : ws)
      if (!articles().contains(w)) out.push_back(w);
    return out;
  };
  if (!content.empty() && (content == strip(pair.source) || content == strip(pair.target)))
    return PromptLevel::kOneNoun;
  for (const auto& w : content)
    if (is_sentence_word(w)) return PromptLevel::kFullDescription;
  return PromptLevel::kFullNouns;
}

PromptLevel classify_level(const Prompt& prompt, const AttributePair& pair) {
  return classify_level(prompt.text, pair);
}

// ---------------------------------------------------------------------------

EditResult run_edit(const EditJob& job, const BackendRegistry& registry,
                    const TextImageEncoder* scorer) {
  const auto start = std::chrono::steady_clock::now();
  const EditBackend& backend = registry.get(job.backend_id);
  const SamplerConfig& cfg = job.sampler;
  if (cfg.resolution <= 0) throw ConfigError("sampler resolution must be positive");
  if (job.image.empty()) throw PreconditionError("edit job has no image");

  const Image input = resize_bilinear(job.image, cfg.resolution, cfg.resolution);

  auto invoke = [&](const SamplerConfig& c) {
    BackendOutput out;
    try {
      out = backend.run(input, job.source_prompt, job.edited_prompt, c);
    } catch (const std::exception& e) {
      throw BackendError("backend '" + job.backend_id + "' failed editing '" +
                         job.source_prompt.text + "' -> '" + job.edited_prompt.text +
                         "': " + e.what());
    }
    if (out.image.width != cfg.resolution || out.image.height != cfg.resolution)
      throw BackendError("backend '" + job.backend_id + "' returned a " +
                         std::to_string(out.image.width) + "x" + std::to_string(out.image.height) +
                         " image, expected " + std::to_string(cfg.resolution) + "x" +
                         std::to_string(cfg.resolution));
    return out;
  };

  EditResult result;
  result.job = job;
  if (cfg.sdedit_auto) {
    if (!scorer) throw CapabilityError("automatic SDEdit t search needs a text-image encoder");
    if (cfg.sdedit_grid.empty()) throw ConfigError("sdedit_grid is empty");
    const Embedding text_emb = scorer->encode_text(scorer->tokenizer().retokenize(job.edited_prompt));
    json search = json::array();
    std::optional<BackendOutput> best;
    double best_score = -INFINITY, best_t = 0.0;
    for (double t : cfg.sdedit_grid) {
      SamplerConfig c = cfg;
      c.sdedit_t = t;
      c.sdedit_auto = false;
      BackendOutput out = invoke(c);
      const double score = clip_score(text_emb, scorer->encode_image(out.image));
      search.push_back({{"t", t}, {"clip_score", score}});
      if (score > best_score) {
        best_score = score;
        best_t = t;
        best = std::move(out);
      }
    }
    result.output = std::move(best->image);
    result.backend_metadata = std::move(best->metadata);
    result.backend_metadata["sdedit_search"] = std::move(search);
    result.backend_metadata["chosen_t"] = best_t;
  } else {
    BackendOutput out = invoke(cfg);
    result.output = std::move(out.image);
    result.backend_metadata = std::move(out.metadata);
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

EditScheduler::EditScheduler(int pool_size)
    : pool_size_(pool_size), slots_(std::max(1, pool_size)) {
  if (pool_size < 1) throw ConfigError("edit pool size must be at least 1");
}

EditResult EditScheduler::run(const EditJob& job, const BackendRegistry& registry,
                              const TextImageEncoder* scorer) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return run_edit(job, registry, scorer);
}

// ---------------------------------------------------------------------------

void to_json(json& j, const SamplerConfig& c) {
  json t = nullptr;
  if (c.sdedit_auto)
    t = "auto";
  else if (c.sdedit_t)
    t = *c.sdedit_t;
  j = json{{"ddim_steps", c.ddim_steps},
           {"guidance", c.guidance},
           {"resolution", c.resolution},
           {"latent_resolution", c.latent_resolution},
           {"sdedit_t", t},
           {"sdedit_grid", c.sdedit_grid},
           {"seed", c.seed}};
}

void from_json(const json& j, SamplerConfig& c) {
  SamplerConfig d;
  c.ddim_steps = j.value("ddim_steps", d.ddim_steps);
  c.guidance = j.value("guidance", d.guidance);
  c.resolution = j.value("resolution", d.resolution);
  c.latent_resolution = j.value("latent_resolution", d.latent_resolution);
  c.sdedit_grid = j.value("sdedit_grid", d.sdedit_grid);
  c.seed = j.value("seed", d.seed);
  c.sdedit_t.reset();
  c.sdedit_auto = false;
  if (j.contains("sdedit_t")) {
    const auto& t = j.at("sdedit_t");
    if (t.is_string()) {
      if (t.get<std::string>() != "auto") throw ConfigError("sdedit_t must be a number or \"auto\"");
      c.sdedit_auto = true;
    } else if (t.is_number()) {
      c.sdedit_t = t.get<double>();
    }
  }
}

void to_json(json& j, const EditJob& job) {
  j = json{{"image", {{"width", job.image.width}, {"height", job.image.height}}},
           {"source_prompt", job.source_prompt},
           {"edited_prompt", job.edited_prompt},
           {"backend_id", job.backend_id},
           {"sampler_config", job.sampler}};
}

void to_json(json& j, const EditResult& r) {
  j = json{{"job", r.job},
           {"output", {{"width", r.output.width}, {"height", r.output.height}}},
           {"backend_metadata", r.backend_metadata},
           {"wall_time", r.wall_time}};
}

}  // namespace promptsmith::edit
