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

#include <cmath>

#include "oracles.hpp"
#include "promptsmith/errors.hpp"
#include "promptsmith/hard_prompt_optimizer.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;
namespace opt = promptsmith::optimizer;
using ps::testing::default_mock;
using Words = std::vector<std::string>;

namespace {

opt::OptimizerConfig small(int steps = 50, opt::InjectionLocation loc = opt::InjectionLocation::kEnd,
                           std::uint64_t seed = 1) {
  opt::OptimizerConfig c;
  c.steps = steps;
  c.location = loc;
  c.seed = seed;
  return c;
}

// Delegates to the mock encoder but turns encode_embeddings into NaN after
// a number of calls.
class FlakyEncoder final : public ps::TextImageEncoder {
 public:
  FlakyEncoder(const ps::TextImageEncoder& inner, int good_calls) : inner_(inner), left_(good_calls) {}
  const ps::Tokenizer& tokenizer() const override { return inner_.tokenizer(); }
  std::size_t dim() const override { return inner_.dim(); }
  ps::Embedding encode_text(const ps::Prompt& p) const override { return inner_.encode_text(p); }
  ps::Embedding encode_image(const ps::Image& i) const override { return inner_.encode_image(i); }
  const ps::Matrix& token_embedding_table() const override { return inner_.token_embedding_table(); }
  bool supports_embedding_input() const override { return true; }
  ps::Embedding encode_embeddings(const ps::Matrix& rows) const override {
    auto e = inner_.encode_embeddings(rows);
    if (left_-- <= 0) e.values[0] = std::nan("");
    return e;
  }
  ps::Matrix encode_embeddings_vjp(const ps::Matrix& rows, std::span<const double> g) const override {
    return inner_.encode_embeddings_vjp(rows, g);
  }

 private:
  const ps::TextImageEncoder& inner_;
  mutable int left_;
};

class TextOnlyEncoder final : public ps::TextImageEncoder {
 public:
  explicit TextOnlyEncoder(const ps::TextImageEncoder& inner) : inner_(inner) {}
  const ps::Tokenizer& tokenizer() const override { return inner_.tokenizer(); }
  std::size_t dim() const override { return inner_.dim(); }
  ps::Embedding encode_text(const ps::Prompt& p) const override { return inner_.encode_text(p); }
  ps::Embedding encode_image(const ps::Image& i) const override { return inner_.encode_image(i); }
  const ps::Matrix& token_embedding_table() const override { return inner_.token_embedding_table(); }

 private:
  const ps::TextImageEncoder& inner_;
};

}  // namespace

TEST(AttributeOffset, Locations) {
  using L = opt::InjectionLocation;
  EXPECT_EQ(opt::attribute_offset(L::kStart, 4, 1), 0);
  EXPECT_EQ(opt::attribute_offset(L::kMiddle, 4, 1), 2);
  EXPECT_EQ(opt::attribute_offset(L::kEnd, 4, 1), 3);
  EXPECT_EQ(opt::attribute_offset(L::kMiddle, 4, 2), 2);
  EXPECT_EQ(opt::attribute_offset(L::kMiddle, 3, 2), 1);
  EXPECT_EQ(opt::attribute_offset(L::kEnd, 4, 2), 2);
  EXPECT_EQ(opt::location_from_string("middle"), L::kMiddle);
  EXPECT_THROW(opt::location_from_string("left"), ps::ConfigError);
}

TEST(Optimizer, ConfigValidation) {
  opt::OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ps::ConfigError);
  EXPECT_NO_THROW(c.validate(true));
  c = {};
  c.num_tokens = 0;
  EXPECT_THROW(c.validate(), ps::ConfigError);
}

TEST(Optimizer, InitStatePinsAttribute) {
  const auto& enc = *default_mock().encoder;
  const opt::HardPromptOptimizer o(enc, small());
  const auto s = o.init_state(Words{"blue", "hair"});
  ASSERT_EQ(s.embeddings.rows(), 4u);
  EXPECT_EQ(s.frozen_mask, (std::vector<bool>{false, false, true, true}));
  const auto& tok = enc.tokenizer();
  EXPECT_EQ(s.frozen_tokens[2], tok.tokenize("blue")[0]);
  EXPECT_EQ(s.frozen_tokens[3], tok.tokenize("hair")[0]);
  const auto row = enc.token_embedding_table().row(static_cast<std::size_t>(s.frozen_tokens[2]));
  EXPECT_TRUE(std::equal(row.begin(), row.end(), s.embeddings.row(2).begin()));

  opt::OptimizerConfig c = small();
  c.num_tokens = 2;
  EXPECT_THROW(opt::HardPromptOptimizer(enc, c).init_state(Words{"blue", "hair"}), ps::ConfigError);
  EXPECT_THROW(o.init_state(Words{"dragon"}), ps::VocabularyError);
}

TEST(Optimizer, ProjectionMatchesBruteForceAndIsIdempotent) {
  const auto& enc = *default_mock().encoder;
  const opt::HardPromptOptimizer o(enc, small());
  ps::Rng rng(2);
  ps::Matrix rows(200, enc.dim());
  for (double& v : rows.data()) v = rng.uniform(-2, 2);
  const auto p = o.project(rows, {});
  for (std::size_t r = 0; r < rows.rows(); ++r)
    ASSERT_EQ(p.ids[r], ps::oracle::nearest_row(rows.row(r), enc.token_embedding_table()));
  const auto again = o.project(p.rows, {});
  EXPECT_EQ(again.ids, p.ids);
  EXPECT_EQ(again.rows, p.rows);
}

TEST(Optimizer, AnalyticGradientMatchesFiniteDifferences) {
  const auto& enc = *default_mock().encoder;
  const opt::HardPromptOptimizer o(enc, small());
  ps::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    ps::Matrix rows(1 + rng.index(4), enc.dim());
    for (double& v : rows.data()) v = rng.uniform(-1, 1);
    ps::Embedding img;
    for (std::size_t i = 0; i < enc.dim(); ++i) img.values.push_back(rng.uniform(-1, 1));
    const auto lg = o.loss_and_gradient(rows, img);
    EXPECT_NEAR(lg.loss, ps::oracle::cosine_loss(rows, img.values, enc), 1e-12);
    const auto fd = ps::oracle::fd_gradient(rows, img.values, enc, 1e-4);
    for (std::size_t i = 0; i < fd.data().size(); ++i)
      EXPECT_NEAR(lg.grad.data()[i], fd.data()[i], 1e-7);
  }
}

TEST(Optimizer, FrozenRowsNeverMove) {
  const auto& gw = default_mock();
  const auto img = ps::testing::depict(gw, "a bear wearing a sweater");
  for (auto loc : {opt::InjectionLocation::kStart, opt::InjectionLocation::kMiddle,
                   opt::InjectionLocation::kEnd}) {
    const opt::HardPromptOptimizer o(*gw.encoder, small(100, loc));
    const auto res = o.optimize(img, Words{"bear"});
    const auto init = o.init_state(Words{"bear"});
    for (std::size_t r = 0; r < init.embeddings.rows(); ++r) {
      if (!init.frozen_mask[r]) continue;
      const auto a = init.embeddings.row(r);
      const auto b = res.state.embeddings.row(r);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << "row " << r;
    }
    const auto words = res.prompt.words();
    EXPECT_EQ(words[static_cast<std::size_t>(opt::attribute_offset(loc, 4, 1))], "bear");
  }
}

TEST(Optimizer, BestScoreIsMonotoneAndReported) {
  const auto& gw = default_mock();
  ps::Rng rng(4);
  const auto img = ps::testing::random_stripes(rng);
  const opt::HardPromptOptimizer o(*gw.encoder, small(200));
  const auto res = o.optimize(img, Words{"cat"});
  double best = -INFINITY;
  for (const auto& r : res.trace) best = std::max(best, r.score);
  EXPECT_EQ(res.score, best);
  EXPECT_EQ(res.trace.size(), 200u);
  EXPECT_EQ(gw.encoder->tokenizer().retokenize(res.prompt).tokens, res.prompt.tokens);
  EXPECT_NEAR(res.score,
              ps::clip_score(gw.encoder->encode_text(res.prompt), gw.encoder->encode_image(img)), 1e-9);
}

TEST(Optimizer, ZeroRateLeavesSoftRowsUntouched) {
  const auto& gw = default_mock();
  opt::OptimizerConfig c = small(5);
  c.learning_rate = 0.0;
  const opt::HardPromptOptimizer o(*gw.encoder, c);
  auto s = o.init_state(Words{"cat"});
  const auto before = s.embeddings;
  const auto img = gw.encoder->encode_image(ps::testing::depict(gw, "a cat on the grass"));
  for (int i = 0; i < 5; ++i) o.step(s, img);
  EXPECT_EQ(s.embeddings, before);
  EXPECT_EQ(s.step_count, 5);
  EXPECT_THROW(o.optimize(ps::testing::depict(gw, "a cat"), Words{"cat"}), ps::ConfigError);
}

TEST(Optimizer, SerialAndParallelAgree) {
  const auto& gw = default_mock();
  const auto img = ps::testing::depict(gw, "a clam pasta on the dish");
  const auto a = opt::HardPromptOptimizer(*gw.encoder, small(150), ps::kernels::Exec::kSerial)
                     .optimize(img, Words{"clam"});
  const auto b = opt::HardPromptOptimizer(*gw.encoder, small(150), ps::kernels::Exec::kParallel)
                     .optimize(img, Words{"clam"});
  EXPECT_EQ(a.prompt, b.prompt);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.state.embeddings, b.state.embeddings);
}

TEST(Optimizer, SeedControlsInitialisation) {
  const auto& gw = default_mock();
  const opt::HardPromptOptimizer a(*gw.encoder, small(1, opt::InjectionLocation::kEnd, 1));
  const opt::HardPromptOptimizer b(*gw.encoder, small(1, opt::InjectionLocation::kEnd, 2));
  EXPECT_EQ(a.init_state(Words{"cat"}).embeddings, a.init_state(Words{"cat"}).embeddings);
  EXPECT_NE(a.init_state(Words{"cat"}).embeddings, b.init_state(Words{"cat"}).embeddings);
}

TEST(Optimizer, NonFiniteLossAbortsWithPartialTrace) {
  const auto& gw = default_mock();
  const FlakyEncoder flaky(*gw.encoder, 3);
  const opt::HardPromptOptimizer o(flaky, small(10));
  try {
    o.optimize(ps::testing::depict(gw, "a cat"), Words{"cat"});
    FAIL() << "expected OptimizationError";
  } catch (const opt::OptimizationError& e) {
    EXPECT_EQ(e.partial_trace.size(), 3u);
  }
}

TEST(Optimizer, NeedsEmbeddingInput) {
  const TextOnlyEncoder enc(*default_mock().encoder);
  EXPECT_THROW(opt::HardPromptOptimizer(enc, small()), ps::CapabilityError);
}

TEST(Optimizer, TraceJsonl) {
  const auto& gw = default_mock();
  const auto res = opt::HardPromptOptimizer(*gw.encoder, small(3)).optimize(ps::testing::depict(gw, "a cat"), Words{"cat"});
  std::ostringstream os;
  opt::write_trace_jsonl(res.trace, os);
  std::istringstream is(os.str());
  int n = 0;
  for (std::string line; std::getline(is, line); ++n) {
    const auto j = ps::json::parse(line);
    EXPECT_EQ(j.at("step").get<int>(), n);
    EXPECT_TRUE(j.contains("loss") && j.contains("score") && j.contains("prompt") && j.contains("tokens"));
  }
  EXPECT_EQ(n, 3);
}
