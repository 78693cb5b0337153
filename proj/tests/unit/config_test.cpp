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

#include <fstream>

#include "promptsmith/config.hpp"
#include "promptsmith/errors.hpp"
#include "promptsmith/mock_gateway.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;
namespace cfg = promptsmith::config;

TEST(Config, DefaultsMatchDocumentedValues) {
  const auto& d = cfg::defaults();
  const auto o = cfg::optimizer_config(d);
  EXPECT_EQ(o.num_tokens, 4);
  EXPECT_EQ(o.steps, 1000);
  EXPECT_DOUBLE_EQ(o.learning_rate, 0.1);
  EXPECT_EQ(o.location, ps::optimizer::InjectionLocation::kEnd);
  const auto s = cfg::sampler_config(d);
  EXPECT_EQ(s.ddim_steps, 50);
  EXPECT_DOUBLE_EQ(s.guidance, 7.5);
  EXPECT_EQ(s.resolution, 512);
  EXPECT_EQ(s.latent_resolution, 64);
  EXPECT_FALSE(s.sdedit_t);
  EXPECT_EQ(cfg::get_path(d, "gateway.mock.fixture_seed"), ps::mock::kDefaultFixtureSeed);
  EXPECT_EQ(cfg::get_path(d, "service.queue_depth"), 4);
  EXPECT_EQ(cfg::exec_mode(d), ps::kernels::Exec::kParallel);
  EXPECT_FALSE(cfg::injector_config(d).continuation_budget);
}

TEST(Config, PathHelpers) {
  ps::json t = ps::json::object();
  cfg::set_path(t, "a.b.c", 3);
  EXPECT_EQ(t, (ps::json{{"a", {{"b", {{"c", 3}}}}}}));
  EXPECT_EQ(cfg::get_path(t, "a.b.c"), 3);
  EXPECT_TRUE(cfg::get_path(t, "a.x").is_null());
  EXPECT_THROW(cfg::set_path(t, "a..b", 1), ps::ConfigError);
}

TEST(Config, EnvParsing) {
  const auto j = cfg::env_overrides({{"PROMPTSMITH_OPTIMIZER__NUM_TOKENS", "6"},
                                     {"PROMPTSMITH_OPTIMIZER__LOCATION", "start"},
                                     {"PROMPTSMITH_SEED", "12"},
                                     {"HOME", "/root"},
                                     {"PROMPTSMITH_GATEWAY__CLIP_BLIP__URL", "http://x:1"}});
  EXPECT_EQ(cfg::get_path(j, "optimizer.num_tokens"), 6);
  EXPECT_EQ(cfg::get_path(j, "optimizer.location"), "start");
  EXPECT_EQ(cfg::get_path(j, "seed"), 12);
  EXPECT_EQ(cfg::get_path(j, "gateway.clip_blip.url"), "http://x:1");
  EXPECT_FALSE(j.contains("home"));
}

TEST(Config, PrecedenceFlagOverEnvOverFileOverDefault) {
  const auto dir = ps::testing::scratch_dir("cfg");
  const auto file = dir / "c.json";
  std::ofstream(file) << R"({"optimizer": {"steps": 11, "num_tokens": 5}, "seed": 2})";
  const std::map<std::string, std::string> env = {{"PROMPTSMITH_OPTIMIZER__STEPS", "22"}};

  // Each combination of present layers picks the highest one.
  for (int mask = 0; mask < 8; ++mask) {
    const bool has_file = mask & 1, has_env = mask & 2, has_flag = mask & 4;
    cfg::Overrides ov;
    if (has_flag) ov["optimizer.steps"] = 33;
    const auto r = cfg::resolve(has_file ? std::optional(file) : std::nullopt,
                                has_env ? env : std::map<std::string, std::string>{}, ov);
    const int want = has_flag ? 33 : has_env ? 22 : has_file ? 11 : 1000;
    EXPECT_EQ(cfg::get_path(r, "optimizer.steps"), want) << mask;
    EXPECT_EQ(cfg::get_path(r, "optimizer.num_tokens"), has_file ? 5 : 4);
    EXPECT_EQ(cfg::get_path(r, "optimizer.learning_rate"), 0.1);
  }
}

TEST(Config, BadFilesAndValues) {
  const auto dir = ps::testing::scratch_dir("cfgbad");
  EXPECT_THROW(cfg::load_file(dir / "missing.json"), ps::ConfigError);
  std::ofstream(dir / "bad.json") << "{nope";
  EXPECT_THROW(cfg::load_file(dir / "bad.json"), ps::ConfigError);
  std::ofstream(dir / "arr.json") << "[1]";
  EXPECT_THROW(cfg::load_file(dir / "arr.json"), ps::ConfigError);

  auto t = cfg::defaults();
  cfg::set_path(t, "optimizer.location", "left");
  EXPECT_THROW(cfg::optimizer_config(t), ps::ConfigError);
  t = cfg::defaults();
  cfg::set_path(t, "sampler.resolution", 0);
  EXPECT_THROW(cfg::sampler_config(t), ps::ConfigError);
  t = cfg::defaults();
  cfg::set_path(t, "exec", "gpu");
  EXPECT_THROW(cfg::exec_mode(t), ps::ConfigError);
}

TEST(Config, MergeReplacesLeavesAndMergesObjects) {
  ps::json a = {{"x", {{"y", 1}, {"z", 2}}}, {"k", {1, 2}}};
  cfg::merge(a, {{"x", {{"y", 5}}}, {"k", {3}}});
  EXPECT_EQ(a, (ps::json{{"x", {{"y", 5}, {"z", 2}}}, {"k", {3}}}));
}
