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

// Benchmark protocol: for every sample, derive a source prompt with the
// method under test, substitute the attribute pair, run the editing backend,
// then measure CLIP score (edited prompt vs edited image) and perceptual
// distance (source image vs edited image).
//
// Manifest (JSON):
//   {"samples": [{"id": "bear-01",
//                 "image": "images/bear-01.png",        // relative to manifest
//                 "source": "bear", "target": "robot",
//                 "references": {"one_noun": "a bear",
//                                "full_nouns": "bear sweater",
//                                "full_description": "a bear wearing a sweater"},
//                 "external_prompts": {"pez_distilled": "bear sweater"},   // optional
//                 "provenance": "real" | "synthetic"}]}
//
// Method ids: one_noun, full_nouns, full_description, caption, optimize,
// external:<key>; any of them may carry a "+filter" suffix to run the token
// filter on the source prompt first.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptsmith/captioning_injector.hpp"
#include "promptsmith/core.hpp"
#include "promptsmith/edit_orchestrator.hpp"
#include "promptsmith/gateway.hpp"
#include "promptsmith/hard_prompt_optimizer.hpp"
#include "promptsmith/kernels.hpp"

namespace promptsmith::eval {

enum class Provenance { kReal, kSynthetic };

struct BenchmarkSample {
  std::string id;
  std::string image_ref;
  Image image;
  AttributePair pair;
  std::map<PromptLevel, std::string> reference_prompts;
  std::map<std::string, std::string> external_prompts;
  Provenance provenance = Provenance::kReal;
};

struct Dataset {
  std::vector<BenchmarkSample> samples;
};

// Loads the manifest and its images. Throws ContractError if a reference
// prompt lacks the source attribute.
Dataset load_manifest(const std::filesystem::path& path);
void validate_sample(const BenchmarkSample& sample);

struct SampleMetrics {
  std::string sample_id;
  bool ok = false;
  std::string error;
  std::string source_prompt;
  std::string edited_prompt;
  double clip_score = 0.0;
  double lpips = 0.0;
};

struct MetricReport {
  std::string method_id;
  std::optional<double> clip_score_mean;
  std::optional<double> lpips_mean;
  std::vector<SampleMetrics> per_sample;
  int failures = 0;
};

struct EvalConfig {
  std::string backend_id = "mock_blend";
  edit::SamplerConfig sampler;
  optimizer::OptimizerConfig optimizer;
  injector::InjectorConfig injector;
  std::uint64_t seed = 0;
  int pool_size = 1;
  kernels::Exec exec = kernels::Exec::kParallel;
};

// Source prompt a method produces for one sample, before substitution.
Prompt method_prompt(const std::string& method_id, const BenchmarkSample& sample,
                     const Gateway& gateway, const EvalConfig& config);

// Per-sample failures are recorded and excluded from the means. Means are
// accumulated in sample-id order so permuting the dataset does not change
// them.
MetricReport evaluate_method(const std::string& method_id, const Dataset& dataset,
                             const edit::BackendRegistry& registry, const Gateway& gateway,
                             const EvalConfig& config);

struct CurvePoint {
  std::string method_id;
  double clip_score_mean = 0.0;
  double lpips_mean = 0.0;
};

struct CurveArtifact {
  std::vector<CurvePoint> points;  // sorted by method id
  std::filesystem::path data_path;
  std::filesystem::path plot_path;
};

// Writes tradeoff.csv and tradeoff.svg into out_dir. Needs at least two
// reports; reports without means are skipped.
CurveArtifact tradeoff_curve(const std::vector<MetricReport>& reports,
                             const std::filesystem::path& out_dir);

void write_report_csv(const MetricReport& report, std::ostream& out);

void to_json(json& j, const SampleMetrics& m);
void to_json(json& j, const MetricReport& r);

}  // namespace promptsmith::eval
