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

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "promptsmith/edit_orchestrator.hpp"
#include "promptsmith/errors.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;
namespace ed = promptsmith::edit;
using ps::testing::default_mock;

namespace {

ps::AttributePair pair(const char* s, const char* t) { return ps::AttributePair::from_strings(s, t); }

ed::SamplerConfig small_sampler() {
  ed::SamplerConfig c;
  c.resolution = 64;
  c.seed = 3;
  return c;
}

class CountingBackend final : public ed::EditBackend {
 public:
  std::string id() const override { return "counting"; }
  ps::edit::BackendOutput run(const ps::Image& image, const ps::Prompt&, const ps::Prompt&,
                              const ed::SamplerConfig&) const override {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    return {image, {}};
  }
  mutable std::atomic<int> in_flight{0};
  mutable std::atomic<int> peak{0};
};

class WrongSizeBackend final : public ed::EditBackend {
 public:
  std::string id() const override { return "wrong"; }
  ps::edit::BackendOutput run(const ps::Image&, const ps::Prompt&, const ps::Prompt&,
                              const ed::SamplerConfig&) const override {
    return {ps::Image(3, 3), {}};
  }
};

}  // namespace

TEST(EditedPrompt, SubstitutesEveryOccurrence) {
  const auto& tok = default_mock().encoder->tokenizer();
  const auto p = tok.make_prompt("a bear wearing a sweater");
  EXPECT_EQ(ed::build_edited_prompt(p, pair("bear", "robot"), tok).text, "a robot wearing a sweater");
  const auto q = tok.make_prompt("a girl with blue hair");
  EXPECT_EQ(ed::build_edited_prompt(q, pair("blue hair", "red hair"), tok).text, "a girl with red hair");
  EXPECT_THROW(ed::build_edited_prompt(p, pair("cat", "dog"), tok), ps::ContractError);
  EXPECT_THROW(ed::build_edited_prompt(p, pair("bear", "bear"), tok), ps::PreconditionError);
}

TEST(PromptLevel, Classification) {
  const auto bear = pair("bear", "robot");
  EXPECT_EQ(ed::classify_level("a bear", bear), ps::PromptLevel::kOneNoun);
  EXPECT_EQ(ed::classify_level("bear", bear), ps::PromptLevel::kOneNoun);
  EXPECT_EQ(ed::classify_level("bear sweater", bear), ps::PromptLevel::kFullNouns);
  EXPECT_EQ(ed::classify_level("a bear wearing a sweater", bear), ps::PromptLevel::kFullDescription);
  const auto clam = pair("clam", "shrimp");
  EXPECT_EQ(ed::classify_level("clam pasta dish", clam), ps::PromptLevel::kFullNouns);
  EXPECT_EQ(ed::classify_level("a clam pasta on the dish", clam), ps::PromptLevel::kFullDescription);
  EXPECT_EQ(ed::classify_level("a red building", pair("red", "blue")), ps::PromptLevel::kFullNouns);
  EXPECT_EQ(ed::classify_level("two children standing", pair("children", "dogs")),
            ps::PromptLevel::kFullDescription);
}

TEST(Registry, BuiltinsAndUnknownIds) {
  const auto reg = ed::BackendRegistry::with_builtins(default_mock());
  EXPECT_EQ(reg.ids(), (std::vector<std::string>{"identity", "mock_blend"}));
  try {
    reg.get("sdedit");
    FAIL();
  } catch (const ps::CapabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("not registered"), std::string::npos);
  }
  const auto reg2 = ed::BackendRegistry::with_builtins(
      default_mock(), ps::json{{"sdedit", {{"entrypoint", "/bin/true"}}}, {"junk", 1}});
  EXPECT_TRUE(reg2.contains("sdedit"));
  EXPECT_FALSE(reg2.contains("junk"));
}

TEST(RunEdit, IdentityReturnsResizedInput) {
  const auto& gw = default_mock();
  const auto reg = ed::BackendRegistry::with_builtins(gw);
  const auto img = ps::testing::depict(gw, "a bear wearing a sweater", 40, 30);
  const auto& tok = gw.encoder->tokenizer();
  const auto src = tok.make_prompt("a bear wearing a sweater");
  const ed::EditJob job{img, src, ed::build_edited_prompt(src, pair("bear", "robot"), tok), "identity",
                        small_sampler()};
  const auto r = ed::run_edit(job, reg);
  EXPECT_EQ(r.output, ps::resize_bilinear(img, 64, 64));
  EXPECT_EQ(r.job, job);
  EXPECT_GE(r.wall_time, 0.0);
}

TEST(RunEdit, MockBlendMovesTowardTargetAndIsSeeded) {
  const auto& gw = default_mock();
  const auto reg = ed::BackendRegistry::with_builtins(gw);
  const auto& tok = gw.encoder->tokenizer();
  const auto img = ps::testing::depict(gw, "a bear wearing a sweater");
  const auto src = tok.make_prompt("a bear wearing a sweater");
  const auto dst = ed::build_edited_prompt(src, pair("bear", "robot"), tok);
  ed::EditJob job{img, src, dst, "mock_blend", small_sampler()};
  job.sampler.sdedit_t = 1.0;
  const auto a = ed::run_edit(job, reg);
  const auto b = ed::run_edit(job, reg);
  EXPECT_EQ(a.output, b.output);
  const auto target = gw.encoder->encode_text(dst);
  EXPECT_GT(ps::cosine_similarity(gw.encoder->encode_image(a.output), target),
            ps::cosine_similarity(gw.encoder->encode_image(img), target));
  EXPECT_GT(a.backend_metadata.at("alpha").get<double>(), 0.0);
}

TEST(RunEdit, SdeditAutoPicksBestGridPoint) {
  const auto& gw = default_mock();
  const auto reg = ed::BackendRegistry::with_builtins(gw);
  const auto& tok = gw.encoder->tokenizer();
  const auto src = tok.make_prompt("a bear wearing a sweater");
  const auto dst = ed::build_edited_prompt(src, pair("bear", "robot"), tok);
  ed::EditJob job{ps::testing::depict(gw, "a bear wearing a sweater"), src, dst, "mock_blend",
                  small_sampler()};
  job.sampler.sdedit_auto = true;
  const auto r = ed::run_edit(job, reg, gw.encoder.get());
  const auto& search = r.backend_metadata.at("sdedit_search");
  ASSERT_EQ(search.size(), 3u);
  double best = -1e300, best_t = 0;
  for (const auto& s : search)
    if (s.at("clip_score").get<double>() > best) {
      best = s.at("clip_score").get<double>();
      best_t = s.at("t").get<double>();
    }
  EXPECT_EQ(r.backend_metadata.at("chosen_t").get<double>(), best_t);
  EXPECT_NEAR(ps::clip_score(gw.encoder->encode_text(dst), gw.encoder->encode_image(r.output)), best, 1e-9);
  EXPECT_THROW(ed::run_edit(job, reg, nullptr), ps::CapabilityError);
}

TEST(RunEdit, BackendErrors) {
  const auto& gw = default_mock();
  auto reg = ed::BackendRegistry::with_builtins(gw);
  reg.add(std::make_shared<WrongSizeBackend>());
  const auto& tok = gw.encoder->tokenizer();
  const auto src = tok.make_prompt("a cat");
  const ed::EditJob job{ps::testing::depict(gw, "a cat"), src, tok.make_prompt("a dog"), "wrong",
                        small_sampler()};
  EXPECT_THROW(ed::run_edit(job, reg), ps::BackendError);
  auto j2 = job;
  j2.backend_id = "nope";
  EXPECT_THROW(ed::run_edit(j2, reg), ps::CapabilityError);
}

TEST(CommandBackend, RunsExternalProgram) {
  const auto dir = ps::testing::scratch_dir("cmd");
  const auto script = dir / "copy.sh";
  {
    std::ofstream s(script);
    s << "#!/bin/sh\n"
         "python3 -c 'import json,shutil,sys; j=json.load(open(sys.argv[1])); "
         "shutil.copy(j[\"input_path\"], j[\"output_path\"]); "
         "json.dump({\"prompt\": j[\"edited_prompt\"], \"steps\": j[\"sampler\"][\"ddim_steps\"]}, "
         "open(j[\"metadata_path\"], \"w\"))' \"$1\"\n";
  }
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);
  const auto& gw = default_mock();
  const auto reg = ed::BackendRegistry::with_builtins(
      gw, ps::json{{"copy", {{"entrypoint", script.string()}}}, {"fail", {{"entrypoint", "/bin/false"}}}});
  const auto& tok = gw.encoder->tokenizer();
  const ed::EditJob job{ps::testing::depict(gw, "a cat"), tok.make_prompt("a cat"), tok.make_prompt("a dog"),
                        "copy", small_sampler()};
  const auto r = ed::run_edit(job, reg);
  EXPECT_EQ(r.output, ps::resize_bilinear(job.image, 64, 64));
  EXPECT_EQ(r.backend_metadata.at("reported").at("prompt"), "a dog");
  EXPECT_EQ(r.backend_metadata.at("reported").at("steps"), 50);

  auto bad = job;
  bad.backend_id = "fail";
  EXPECT_THROW(ed::run_edit(bad, reg), ps::BackendError);
}

TEST(Scheduler, BoundsConcurrentBackendCalls) {
  const auto& gw = default_mock();
  ed::BackendRegistry reg;
  auto counting = std::make_shared<CountingBackend>();
  reg.add(counting);
  const auto& tok = gw.encoder->tokenizer();
  const ed::EditJob job{ps::Image(16, 16), tok.make_prompt("a cat"), tok.make_prompt("a dog"), "counting",
                        [] {
                          ed::SamplerConfig c;
                          c.resolution = 16;
                          return c;
                        }()};
  ed::EditScheduler sched(2);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) ts.emplace_back([&] { sched.run(job, reg); });
  for (auto& t : ts) t.join();
  EXPECT_LE(counting->peak.load(), 2);
  EXPECT_GE(counting->peak.load(), 1);
  EXPECT_THROW(ed::EditScheduler(0), ps::ConfigError);
}

TEST(SamplerConfig, DefaultsAndJson) {
  const ed::SamplerConfig d;
  EXPECT_EQ(d.ddim_steps, 50);
  EXPECT_EQ(d.guidance, 7.5);
  EXPECT_EQ(d.resolution, 512);
  EXPECT_EQ(d.latent_resolution, 64);
  EXPECT_EQ(ps::json(d).get<ed::SamplerConfig>(), d);
  ed::SamplerConfig a = d;
  a.sdedit_auto = true;
  EXPECT_EQ(ps::json(a).at("sdedit_t"), "auto");
  EXPECT_EQ(ps::json(a).get<ed::SamplerConfig>(), a);
  a.sdedit_auto = false;
  a.sdedit_t = 0.3;
  EXPECT_EQ(ps::json(a).get<ed::SamplerConfig>(), a);
  EXPECT_THROW((ps::json{{"sdedit_t", "soon"}}.get<ed::SamplerConfig>()), ps::ConfigError);
}
