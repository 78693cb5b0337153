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

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <thread>

#include "promptsmith/captioning_injector.hpp"
#include "promptsmith/config.hpp"
#include "promptsmith/image.hpp"
#include "promptsmith/service.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;
namespace svc = promptsmith::service;
using ps::testing::default_mock;

namespace {

// Holds every run until released.
class GateBackend final : public ps::edit::EditBackend {
 public:
  std::string id() const override { return "gate"; }
  ps::edit::BackendOutput run(const ps::Image& image, const ps::Prompt&, const ps::Prompt&,
                              const ps::edit::SamplerConfig&) const override {
    std::unique_lock lock(mu_);
    ++entered_;
    cv_.notify_all();
    cv_.wait(lock, [&] { return open_; });
    return {image, {{"gate", true}}};
  }
  void open() {
    std::lock_guard lock(mu_);
    open_ = true;
    cv_.notify_all();
  }
  void wait_entered(int n) const {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return entered_ >= n; });
  }

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable int entered_ = 0;
  bool open_ = false;
};

svc::ServiceOptions options(const std::filesystem::path& dir, int depth = 4) {
  svc::ServiceOptions o;
  o.data_dir = dir;
  o.queue_depth = depth;
  o.config = ps::config::defaults();
  ps::config::set_path(o.config, "sampler.resolution", 64);
  ps::config::set_path(o.config, "optimizer.steps", 40);
  return o;
}

ps::Image bear_image() { return ps::testing::depict(default_mock(), "a bear wearing a sweater"); }

ps::edit::BackendRegistry registry() { return ps::edit::BackendRegistry::with_builtins(default_mock()); }

}  // namespace

TEST(Service, SessionLifecycle) {
  const auto dir = ps::testing::scratch_dir("svc");
  svc::Service s(default_mock(), registry(), options(dir));
  const auto c = s.create_session(bear_image(), {{"source", "bear"}, {"target", "robot"}});
  ASSERT_EQ(c.status, 201) << c.body.dump();
  const std::string id = c.body.at("id");
  EXPECT_EQ(c.body.at("source"), (ps::json{"bear"}));
  EXPECT_EQ(c.body.at("image").at("sha256").get<std::string>().size(), 64u);

  const auto g = s.get_session(id);
  EXPECT_EQ(g.status, 200);
  EXPECT_EQ(g.body, c.body);
  EXPECT_EQ(s.get_session("deadbeef").status, 404);
  EXPECT_EQ(s.inject("deadbeef", {}).status, 404);
}

TEST(Service, InjectMatchesDirectCall) {
  const auto dir = ps::testing::scratch_dir("svcinj");
  svc::Service s(default_mock(), registry(), options(dir));
  const std::string id = s.create_session(bear_image(), {}).body.at("id");
  const auto r = s.inject(id, {{"source", "bear"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto direct = ps::injector::inject(bear_image(), std::vector<std::string>{"bear"}, default_mock());
  EXPECT_EQ(r.body, ps::json(direct));
  const auto sess = s.get_session(id).body;
  EXPECT_EQ(sess.at("prompt_origin"), "inject");
  EXPECT_EQ(sess.at("prompt"), ps::json(direct.chosen));

  const auto o = s.inject(id, {{"source", "bear"}, {"synonym_index", 2}});
  ASSERT_EQ(o.status, 200) << o.body.dump();
  EXPECT_TRUE(o.body.at("user_override").get<bool>());
  EXPECT_EQ(o.body.at("synonym_index"), 2);
  EXPECT_EQ(s.inject(id, {{"source", "bear"}, {"synonym_index", 99}}).status, 422);
}

TEST(Service, EditPreconditions) {
  const auto dir = ps::testing::scratch_dir("svcpre");
  svc::Service s(default_mock(), registry(), options(dir));
  const std::string id = s.create_session(bear_image(), {}).body.at("id");
  EXPECT_EQ(s.edit(id, {{"source", "bear"}, {"target", "robot"}}).status, 409);
  EXPECT_EQ(s.edit(id, {{"source", "bear"}, {"target", "robot"}, {"candidate", "append"}}).status, 409);
  EXPECT_EQ(s.edit(id, {{"source", "bear"}}).status, 422);
  EXPECT_EQ(s.edit(id, {{"source", "bear"}, {"target", "bear"}, {"prompt", "a bear"}}).status, 422);
  EXPECT_EQ(s.edit(id, {{"source", "bear"}, {"target", "robot"}, {"prompt", "a cat"}}).status, 422);
  EXPECT_EQ(s.edit(id, {{"source", "bear"}, {"target", "robot"}, {"prompt", "a bear"}, {"backend", "sdedit"}})
                .status,
            422);
  EXPECT_EQ(s.create_session(bear_image(), {{"source", "bear"}, {"target", "bear"}}).status, 422);
  EXPECT_EQ(s.filter(id, {}).status, 409);
  EXPECT_EQ(s.optimize(id, {{"source", "bear"}, {"location", "left"}}).status, 400);
}

TEST(Service, EditRunsAndResultsPersist) {
  const auto dir = ps::testing::scratch_dir("svcedit");
  std::string id;
  {
    svc::Service s(default_mock(), registry(), options(dir));
    id = s.create_session(bear_image(), {{"source", "bear"}, {"target", "robot"}}).body.at("id");
    ASSERT_EQ(s.optimize(id, {}).status, 200);
    ASSERT_EQ(s.filter(id, {}).status, 200);
    const auto e = s.edit(id, {});
    ASSERT_EQ(e.status, 202) << e.body.dump();
    EXPECT_EQ(e.body.at("result_index"), 0);
    ASSERT_EQ(s.inject(id, {}).status, 200);
    const auto e2 = s.edit(id, {{"candidate", "append"}});
    ASSERT_EQ(e2.status, 202) << e2.body.dump();
    EXPECT_EQ(e2.body.at("result_index"), 1);
    s.drain();
    const auto r = s.get_result(id, 0);
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.at("status"), "done") << r.body.dump();
    EXPECT_TRUE(r.body.contains("image_png_base64"));
    EXPECT_TRUE(r.body.contains("clip_score"));
    EXPECT_EQ(s.get_result(id, 1).body.at("status"), "done");
    EXPECT_EQ(s.get_result(id, 2).status, 404);
  }
  svc::Service again(default_mock(), registry(), options(dir));
  const auto sess = again.get_session(id);
  ASSERT_EQ(sess.status, 200);
  EXPECT_EQ(sess.body.at("results").size(), 2u);
  EXPECT_EQ(sess.body.at("prompt_origin"), "user");
  EXPECT_FALSE(sess.body.at("optimization").is_null());
  const auto r = again.get_result(id, 0);
  EXPECT_EQ(r.body.at("status"), "done");
  const auto sha = r.body.at("image").at("sha256").get<std::string>();
  EXPECT_TRUE(again.store().get_blob(sha, ".png"));
}

TEST(Service, QueueOverflowIs503) {
  const auto dir = ps::testing::scratch_dir("svcq");
  auto reg = registry();
  auto gate = std::make_shared<GateBackend>();
  reg.add(gate);
  auto opts = options(dir, 2);
  ps::config::set_path(opts.config, "edit.backend", "gate");
  svc::Service s(default_mock(), std::move(reg), opts);
  const std::string id = s.create_session(bear_image(), {{"source", "bear"}, {"target", "robot"}}).body.at("id");
  const ps::json body = {{"prompt", "a bear"}};
  ASSERT_EQ(s.edit(id, body).status, 202);
  gate->wait_entered(1);
  EXPECT_EQ(s.edit(id, body).status, 202);
  EXPECT_EQ(s.edit(id, body).status, 202);
  const auto full = s.edit(id, body);
  EXPECT_EQ(full.status, 503);
  EXPECT_NE(full.body.at("error").get<std::string>().find("full"), std::string::npos);
  EXPECT_EQ(s.get_result(id, 0).body.at("status"), "running");
  EXPECT_EQ(s.get_result(id, 1).body.at("status"), "queued");
  gate->open();
  s.drain();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(s.get_result(id, i).body.at("status"), "done");
}

TEST(Service, HttpRoutesAndIdempotency) {
  const auto dir = ps::testing::scratch_dir("svchttp");
  svc::Service s(default_mock(), registry(), options(dir));
  httplib::Server server;
  s.install(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  struct Joiner {
    httplib::Server& s;
    std::thread& t;
    ~Joiner() {
      s.stop();
      t.join();
    }
  } joiner{server, th};
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto h = cli.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(h->get_header_value("Access-Control-Allow-Origin"), "*");

  const auto png = ps::encode_png(bear_image());
  httplib::MultipartFormDataItems items = {
      {"image", std::string(png.begin(), png.end()), "in.png", "image/png"},
      {"source", "bear", "", ""},
      {"target", "robot", "", ""}};
  auto c = cli.Post("/sessions", items);
  ASSERT_TRUE(c);
  ASSERT_EQ(c->status, 201) << c->body;
  const std::string id = ps::json::parse(c->body).at("id");

  httplib::Headers idem = {{"Idempotency-Key", "k1"}};
  auto a = cli.Post("/sessions/" + id + "/edit", idem, R"({"prompt": "a bear"})", "application/json");
  auto b = cli.Post("/sessions/" + id + "/edit", idem, R"({"prompt": "a bear"})", "application/json");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->status, 202);
  EXPECT_EQ(b->status, 202);
  EXPECT_EQ(a->body, b->body);
  s.drain();
  EXPECT_EQ(s.get_session(id).body.at("results").size(), 1u);

  auto bad = cli.Post("/sessions/" + id + "/inject", "{nope", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = cli.Get("/sessions/00ff");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto r = cli.Get("/sessions/" + id + "/results/0");
  ASSERT_TRUE(r);
  const auto rj = ps::json::parse(r->body);
  EXPECT_EQ(rj.at("status"), "done");
  auto img = cli.Get("/images/" + rj.at("image").at("sha256").get<std::string>());
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 200);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(ps::decode_png({reinterpret_cast<const std::uint8_t*>(img->body.data()), img->body.size()}).width, 64);

}

TEST(Store, BlobsAreContentAddressed) {
  const auto dir = ps::testing::scratch_dir("store");
  svc::Store st(dir);
  const std::vector<std::uint8_t> bytes = {1, 2, 3};
  const auto a = st.put_blob(bytes, ".bin");
  EXPECT_EQ(a, st.put_blob(bytes, ".bin"));
  EXPECT_EQ(a, "039058c6f2c0cb492c533b0a4d14ef77cc0f78abccced5287d84a1a2011cfb81");
  EXPECT_EQ(*st.get_blob(a, ".bin"), bytes);
  EXPECT_FALSE(st.get_blob(std::string(64, '0'), ".bin"));
  EXPECT_TRUE(st.put_if_absent("n", "k", "v"));
  EXPECT_FALSE(st.put_if_absent("n", "k", "w"));
  EXPECT_EQ(*st.get("n", "k"), "v");
}
