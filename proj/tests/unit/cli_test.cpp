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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptsmith/cli.hpp"
#include "promptsmith/image.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const fs::path& out_dir, std::vector<std::string> args,
        const std::map<std::string, std::string>& env = {}) {
  args.insert(args.begin(), {"--out-dir", out_dir.string()});
  std::ostringstream out, err;
  const int code = ps::cli::dispatch(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::size_t run_records(const fs::path& out_dir) {
  if (!fs::exists(out_dir / "runs")) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(out_dir / "runs"), {}));
}

ps::json last_record(const fs::path& out_dir) {
  fs::path newest;
  fs::file_time_type t{};
  for (const auto& e : fs::directory_iterator(out_dir / "runs"))
    if (newest.empty() || e.last_write_time() >= t) {
      newest = e.path();
      t = e.last_write_time();
    }
  std::ifstream in(newest);
  return ps::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path demo_image(const fs::path& dir, const std::string& text = "a bear wearing a sweater") {
  const auto p = dir / "in.png";
  ps::write_png(ps::testing::depict(ps::testing::default_mock(), text), p);
  return p;
}

}  // namespace

TEST(Cli, HappyPathsWriteResultAndRecord) {
  const auto dir = ps::testing::scratch_dir("cli");
  const auto img = demo_image(dir).string();
  const auto od = dir / "out";

  auto r = run(od, {"caption", "--image", img});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(ps::json::parse(r.out).contains("caption"));
  EXPECT_TRUE(fs::exists(od / "caption.json"));

  r = run(od, {"--json", "inject", "--image", img, "--source-word", "bear", "--target-word", "robot"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  const auto inj = ps::json::parse(r.out);
  EXPECT_NE(inj.at("chosen").at("text").get<std::string>().find("bear"), std::string::npos);

  r = run(od, {"optimize", "--image", img, "--source-word", "bear", "--steps", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto o = ps::json::parse(r.out);
  EXPECT_EQ(o.at("steps"), 30);
  EXPECT_EQ(o.at("num_tokens"), 4);
  std::ifstream trace(od / "trace.jsonl");
  int lines = 0;
  for (std::string l; std::getline(trace, l);) ++lines;
  EXPECT_EQ(lines, 30);

  r = run(od, {"filter", "--image", img, "--prompt", "a bear wearing a sweater on the grass", "--source-word", "bear"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = ps::json::parse(r.out);
  EXPECT_NE(f.at("prompt").at("text").get<std::string>().find("bear"), std::string::npos);

  r = run(od, {"--set", "sampler.resolution=64", "edit", "--image", img, "--source-word", "bear",
               "--target-word", "robot"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = ps::json::parse(r.out);
  EXPECT_EQ(e.at("prompt_origin"), "inject");
  EXPECT_TRUE(fs::exists(od / "edited.png"));
  EXPECT_EQ(ps::read_png(od / "edited.png").width, 64);

  EXPECT_EQ(run_records(od), 5u);
  const auto rec = last_record(od);
  EXPECT_EQ(rec.at("command"), "edit");
  EXPECT_EQ(rec.at("exit_code"), 0);
  EXPECT_EQ(rec.at("tool_version"), "0.1.0");
  EXPECT_EQ(rec.at("inputs_digest").get<std::string>().size(), 64u);
  EXPECT_TRUE(rec.at("timings").contains("total_s"));
  EXPECT_EQ(rec.at("config").at("sampler").at("resolution"), 64);
}

TEST(Cli, UsageErrorsExitTwoWithRecord) {
  const auto dir = ps::testing::scratch_dir("cliusage");
  const auto od = dir / "out";
  auto r = run(od, {"inject", "--source-word", "bear"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--image"), std::string::npos);
  r = run(od, {"frobnicate"});
  EXPECT_EQ(r.code, 2);
  r = run(od, {"optimize", "--image", "x.png", "--source-word", "bear", "--location", "left"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run_records(od), 3u);
  EXPECT_EQ(last_record(od).at("exit_code"), 2);
}

TEST(Cli, DomainErrorsExitOne) {
  const auto dir = ps::testing::scratch_dir("clidomain");
  const auto img = demo_image(dir).string();
  const auto od = dir / "out";
  auto r = run(od, {"caption", "--image", (dir / "missing.png").string()});
  EXPECT_EQ(r.code, 1);
  r = run(od, {"edit", "--image", img, "--source-word", "bear", "--target-word", "robot", "--backend", "sdedit"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not registered"), std::string::npos);
  r = run(od, {"optimize", "--image", img, "--source-word", "dragon", "--steps", "5"});
  EXPECT_EQ(r.code, 1);
  r = run(od, {"edit", "--image", img, "--source-word", "bear", "--target-word", "bear"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(run_records(od), 4u);
  const auto rec = last_record(od);
  EXPECT_EQ(rec.at("exit_code"), 1);
  EXPECT_TRUE(rec.contains("error"));
}

TEST(Cli, CommandsAreDeterministic) {
  const auto dir = ps::testing::scratch_dir("clidet");
  const auto img = demo_image(dir, "a clam pasta on the dish").string();
  const std::vector<std::vector<std::string>> cmds = {
      {"--seed", "4", "inject", "--image", img, "--source-word", "clam"},
      {"--seed", "4", "optimize", "--image", img, "--source-word", "clam", "--steps", "80"},
      {"--seed", "4", "filter", "--image", img, "--prompt", "a clam pasta on the dish with a bowl"},
  };
  for (const auto& c : cmds) {
    const auto a = run(dir / "a", c);
    const auto b = run(dir / "b", c);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << c[2];
  }
  EXPECT_EQ(slurp(dir / "a" / "trace.jsonl"), slurp(dir / "b" / "trace.jsonl"));
}

TEST(Cli, FlagBeatsEnvBeatsFileBeatsDefault) {
  const auto dir = ps::testing::scratch_dir("cliprec");
  const auto img = demo_image(dir).string();
  const auto file = dir / "c.json";
  std::ofstream(file) << R"({"optimizer": {"steps": 7, "num_tokens": 5}})";
  const std::map<std::string, std::string> env = {{"PROMPTSMITH_OPTIMIZER__STEPS", "9"}};
  const std::vector<std::string> base = {"optimize", "--image", img, "--source-word", "bear"};
  using Args = std::vector<std::string>;
  auto with = [&](Args pre, Args post = {}) {
    pre.insert(pre.end(), base.begin(), base.end());
    pre.insert(pre.end(), post.begin(), post.end());
    return pre;
  };

  auto r = run(dir / "o", with({"--config", file.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ps::json::parse(r.out).at("steps"), 7);
  EXPECT_EQ(ps::json::parse(r.out).at("num_tokens"), 5);
  r = run(dir / "o", with({"--config", file.string()}), env);
  EXPECT_EQ(ps::json::parse(r.out).at("steps"), 9);
  r = run(dir / "o", with({"--config", file.string()}, Args{"--steps", "3"}), env);
  EXPECT_EQ(ps::json::parse(r.out).at("steps"), 3);
  r = run(dir / "o", with(Args{"--set", "optimizer.steps=4"}));
  EXPECT_EQ(ps::json::parse(r.out).at("steps"), 4);
  r = run(dir / "o", with({}, Args{"--steps", "2"}));
  EXPECT_EQ(ps::json::parse(r.out).at("steps"), 2);
  EXPECT_EQ(ps::json::parse(r.out).at("num_tokens"), 4);
}

TEST(Cli, BenchWritesReportsAndCurve) {
  const auto dir = ps::testing::scratch_dir("clibench");
  const auto& gw = ps::testing::default_mock();
  fs::create_directories(dir / "images");
  ps::write_png(ps::testing::depict(gw, "a bear wearing a sweater"), dir / "images/bear.png");
  ps::write_png(ps::testing::depict(gw, "a corgi sitting on the grass"), dir / "images/corgi.png");
  std::ofstream(dir / "m.json") << R"({"samples": [
    {"id": "bear", "image": "images/bear.png", "source": "bear", "target": "robot",
     "references": {"one_noun": "a bear", "full_nouns": "bear sweater", "full_description": "a bear wearing a sweater"}},
    {"id": "corgi", "image": "images/corgi.png", "source": "corgi", "target": "cat",
     "references": {"one_noun": "corgi", "full_nouns": "corgi grass", "full_description": "a corgi sitting on the grass"}}]})";
  const std::vector<std::string> args = {"--set", "sampler.resolution=64", "--set", "optimizer.steps=40",
                                         "bench", "--manifest", (dir / "m.json").string()};
  const auto a = run(dir / "a", args);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto j = ps::json::parse(a.out);
  EXPECT_EQ(j.at("reports").size(), 5u);
  EXPECT_EQ(j.at("curve").at("points").size(), 5u);
  EXPECT_TRUE(fs::exists(dir / "a/bench/tradeoff.svg"));
  EXPECT_TRUE(fs::exists(dir / "a/bench/report-optimize.csv"));
  const auto b = run(dir / "b", args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(dir / "a/bench/tradeoff.csv"), slurp(dir / "b/bench/tradeoff.csv"));
}

TEST(Cli, BinaryExitCodes) {
  const char* bin = std::getenv("PROMPTSMITH_CLI");
  if (!bin) GTEST_SKIP() << "PROMPTSMITH_CLI not set";
  const auto dir = ps::testing::scratch_dir("clibin");
  const auto od = (dir / "out").string();
  auto sh = [&](const std::string& tail) {
    const int s = std::system((std::string(bin) + " --out-dir " + od + " " + tail + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const auto img = demo_image(dir).string();
  EXPECT_EQ(sh("caption --image " + img), 0);
  EXPECT_EQ(sh("caption"), 2);
  EXPECT_EQ(sh("caption --image " + (dir / "nope.png").string()), 1);
  EXPECT_EQ(run_records(dir / "out"), 3u);
}
