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

#include "promptsmith/remote_gateway.hpp"

#include <mutex>

#include "httplib.h"
#include "promptsmith/errors.hpp"

namespace promptsmith::remote {

namespace {

class Connection {
 public:
  Connection(const std::string& base_url, int timeout_s) : client_(base_url) {
    client_.set_connection_timeout(10, 0);
    client_.set_read_timeout(timeout_s, 0);
    client_.set_write_timeout(timeout_s, 0);
  }

  json get(const std::string& path) {
    std::lock_guard lock(mu_);
    return check(path, client_.Get(path));
  }

  json post(const std::string& path, const json& body) {
    std::lock_guard lock(mu_);
    return check(path, client_.Post(path, body.dump(), "application/json"));
  }

 private:
  static json check(const std::string& path, const httplib::Result& res) {
    if (!res) throw GatewayError("model server unreachable for " + path + ": " +
                                 httplib::to_string(res.error()));
    json body = json::parse(res->body, nullptr, false);
    if (res->status / 100 != 2) {
      std::string msg = body.is_object() ? body.value("error", res->body) : res->body;
      throw GatewayError("model server " + path + " returned " + std::to_string(res->status) +
                         ": " + msg);
    }
    if (body.is_discarded()) throw GatewayError("model server " + path + " returned invalid JSON");
    return body;
  }

  std::mutex mu_;
  httplib::Client client_;
};

std::string png_b64(const Image& img) { return base64_encode(encode_png(img)); }

Embedding embedding_from(const json& j) {
  return Embedding{j.at("embedding").get<std::vector<double>>(), NormKind::kRaw};
}

class RemoteTokenizer final : public Tokenizer {
 public:
  RemoteTokenizer(std::shared_ptr<Connection> conn, std::string id, std::size_t size,
                  std::string prefix)
      : conn_(std::move(conn)), id_(std::move(id)), size_(size), prefix_(std::move(prefix)) {}

  const std::string& id() const override { return id_; }
  std::size_t size() const override { return size_; }

  std::vector<TokenId> tokenize(std::string_view text) const override {
    return conn_->post(prefix_ + "/tokenize", {{"text", text}})
        .at("tokens")
        .get<std::vector<TokenId>>();
  }

  std::string decode(std::span<const TokenId> tokens) const override {
    if (tokens.empty()) throw PreconditionError("cannot decode an empty token sequence");
    return conn_->post(prefix_ + "/decode", {{"tokens", std::vector<TokenId>(tokens.begin(), tokens.end())}})
        .at("text")
        .get<std::string>();
  }

 private:
  std::shared_ptr<Connection> conn_;
  std::string id_;
  std::size_t size_;
  std::string prefix_;
};

class RemoteEncoder final : public TextImageEncoder {
 public:
  RemoteEncoder(std::shared_ptr<Connection> conn, const json& info)
      : conn_(conn),
        tokenizer_(conn, info.at("vocab_id").get<std::string>(),
                   info.at("vocab_size").get<std::size_t>(), ""),
        dim_(info.at("dim").get<std::size_t>()),
        embedding_input_(info.value("supports_embedding_input", false)) {}

  const Tokenizer& tokenizer() const override { return tokenizer_; }
  std::size_t dim() const override { return dim_; }

  Embedding encode_text(const Prompt& prompt) const override {
    if (prompt.vocab_id != tokenizer_.id())
      throw VocabularyError("prompt from vocabulary '" + prompt.vocab_id + "' given to encoder '" +
                            tokenizer_.id() + "'");
    return embedding_from(conn_->post("/encode_text", {{"tokens", prompt.tokens}}));
  }

  Embedding encode_image(const Image& image) const override {
    return embedding_from(conn_->post("/encode_image", {{"image_png_base64", png_b64(image)}}));
  }

  const Matrix& token_embedding_table() const override {
    std::call_once(table_once_, [this] {
      table_ = conn_->get("/token_embeddings").at("embeddings").get<Matrix>();
    });
    return table_;
  }

  bool supports_embedding_input() const override { return embedding_input_; }

  Embedding encode_embeddings(const Matrix& rows) const override {
    if (!embedding_input_) return TextImageEncoder::encode_embeddings(rows);
    return embedding_from(conn_->post("/encode_embeddings", {{"embeddings", rows}}));
  }

  Matrix encode_embeddings_vjp(const Matrix& rows, std::span<const double> grad) const override {
    if (!embedding_input_) return TextImageEncoder::encode_embeddings_vjp(rows, grad);
    json body{{"embeddings", rows}, {"grad", std::vector<double>(grad.begin(), grad.end())}};
    return conn_->post("/encode_embeddings_vjp", body).at("grad").get<Matrix>();
  }

 private:
  std::shared_ptr<Connection> conn_;
  RemoteTokenizer tokenizer_;
  std::size_t dim_;
  bool embedding_input_;
  mutable std::once_flag table_once_;
  mutable Matrix table_;
};

class RemoteCaptioner final : public Captioner {
 public:
  RemoteCaptioner(std::shared_ptr<Connection> conn, const json& info)
      : conn_(conn),
        tokenizer_(conn, info.value("caption_vocab_id", "remote-caption"),
                   info.value("caption_vocab_size", std::size_t{0}), "/caption") {}

  const Tokenizer& tokenizer() const override { return tokenizer_; }

  Prompt generate(const Image& image) const override {
    auto tokens = conn_->post("/caption/generate", {{"image_png_base64", png_b64(image)}})
                      .at("tokens")
                      .get<std::vector<TokenId>>();
    if (tokens.empty()) throw GatewayError("model server returned an empty caption");
    return tokenizer_.from_tokens(tokens);
  }

  Prompt continue_caption(const Image& image, const Prompt& prefix,
                          int max_new_tokens) const override {
    if (prefix.vocab_id != tokenizer_.id())
      throw VocabularyError("prefix from vocabulary '" + prefix.vocab_id +
                            "' given to captioner '" + tokenizer_.id() + "'");
    auto tokens = conn_->post("/caption/continue", {{"image_png_base64", png_b64(image)},
                                                    {"prefix_tokens", prefix.tokens},
                                                    {"max_new_tokens", max_new_tokens}})
                      .at("tokens")
                      .get<std::vector<TokenId>>();
    if (tokens.size() < prefix.tokens.size() ||
        !std::equal(prefix.tokens.begin(), prefix.tokens.end(), tokens.begin()))
      throw GatewayError("model server continuation does not begin with the prefix");
    return tokenizer_.from_tokens(tokens);
  }

 private:
  std::shared_ptr<Connection> conn_;
  RemoteTokenizer tokenizer_;
};

class RemoteMetric final : public PerceptualMetric {
 public:
  explicit RemoteMetric(std::shared_ptr<Connection> conn) : conn_(std::move(conn)) {}
  std::string name() const override { return "remote"; }
  double distance(const Image& a, const Image& b) const override {
    return conn_->post("/perceptual", {{"a_png_base64", png_b64(a)}, {"b_png_base64", png_b64(b)}})
        .at("distance")
        .get<double>();
  }

 private:
  std::shared_ptr<Connection> conn_;
};

}  // namespace

Gateway remote_gateway(const std::string& base_url, int timeout_s) {
  auto conn = std::make_shared<Connection>(base_url, timeout_s);
  const json info = conn->get("/info");
  json meta{{"backend", "clip_blip"},
            {"url", base_url},
            {"server", info},
            {"clip_score", "100*cosine, unclamped"}};
  return Gateway{"clip_blip", std::make_shared<const RemoteEncoder>(conn, info),
                 std::make_shared<const RemoteCaptioner>(conn, info),
                 std::make_shared<const RemoteMetric>(conn), std::move(meta)};
}

// ---------------------------------------------------------------------------

namespace {

using Handler = std::function<json(const json&)>;

void json_route(httplib::Server& server, const std::string& path, Handler h, bool post = true) {
  auto wrapped = [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      json body = req.body.empty() ? json::object() : json::parse(req.body);
      res.set_content(h(body).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  };
  if (post)
    server.Post(path, wrapped);
  else
    server.Get(path, wrapped);
}

Image image_from(const json& j, const char* key) {
  return decode_png(base64_decode(j.at(key).get<std::string>()));
}

}  // namespace

void install_gateway_routes(httplib::Server& server, Gateway gw) {
  auto g = std::make_shared<Gateway>(std::move(gw));
  json_route(
      server, "/info",
      [g](const json&) {
        return json{{"dim", g->encoder->dim()},
                    {"vocab_id", g->encoder->tokenizer().id()},
                    {"vocab_size", g->encoder->vocab_size()},
                    {"caption_vocab_id", g->captioner->tokenizer().id()},
                    {"caption_vocab_size", g->captioner->tokenizer().size()},
                    {"supports_embedding_input", g->encoder->supports_embedding_input()}};
      },
      false);
  json_route(server, "/tokenize", [g](const json& b) {
    return json{{"tokens", g->encoder->tokenizer().tokenize(b.at("text").get<std::string>())}};
  });
  json_route(server, "/decode", [g](const json& b) {
    return json{{"text", g->encoder->tokenizer().decode(b.at("tokens").get<std::vector<TokenId>>())}};
  });
  json_route(server, "/encode_text", [g](const json& b) {
    auto p = g->encoder->tokenizer().from_tokens(b.at("tokens").get<std::vector<TokenId>>());
    return json{{"embedding", g->encoder->encode_text(p).values}};
  });
  json_route(server, "/encode_image", [g](const json& b) {
    return json{{"embedding", g->encoder->encode_image(image_from(b, "image_png_base64")).values}};
  });
  json_route(
      server, "/token_embeddings",
      [g](const json&) { return json{{"embeddings", g->encoder->token_embedding_table()}}; },
      false);
  json_route(server, "/encode_embeddings", [g](const json& b) {
    return json{{"embedding", g->encoder->encode_embeddings(b.at("embeddings").get<Matrix>()).values}};
  });
  json_route(server, "/encode_embeddings_vjp", [g](const json& b) {
    auto grad = b.at("grad").get<std::vector<double>>();
    return json{{"grad", g->encoder->encode_embeddings_vjp(b.at("embeddings").get<Matrix>(), grad)}};
  });
  json_route(server, "/caption/tokenize", [g](const json& b) {
    return json{{"tokens", g->captioner->tokenizer().tokenize(b.at("text").get<std::string>())}};
  });
  json_route(server, "/caption/decode", [g](const json& b) {
    return json{
        {"text", g->captioner->tokenizer().decode(b.at("tokens").get<std::vector<TokenId>>())}};
  });
  json_route(server, "/caption/generate", [g](const json& b) {
    return json{{"tokens", g->captioner->generate(image_from(b, "image_png_base64")).tokens}};
  });
  json_route(server, "/caption/continue", [g](const json& b) {
    auto prefix =
        g->captioner->tokenizer().from_tokens(b.at("prefix_tokens").get<std::vector<TokenId>>());
    auto out = g->captioner->continue_caption(image_from(b, "image_png_base64"), prefix,
                                              b.at("max_new_tokens").get<int>());
    return json{{"tokens", out.tokens}};
  });
  json_route(server, "/perceptual", [g](const json& b) {
    return json{{"distance",
                 g->metric->distance(image_from(b, "a_png_base64"), image_from(b, "b_png_base64"))}};
  });
}

}  // namespace promptsmith::remote
