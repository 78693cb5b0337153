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

#include "promptsmith/service.hpp"

#include <sqlite3.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "promptsmith/captioning_injector.hpp"
#include "promptsmith/config.hpp"
#include "promptsmith/digest.hpp"
#include "promptsmith/errors.hpp"
#include "promptsmith/hard_prompt_optimizer.hpp"
#include "promptsmith/token_filter.hpp"

namespace promptsmith::service {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Store

namespace {

void check(int rc, sqlite3* db, const char* what) {
  if (rc != SQLITE_OK && rc != SQLITE_DONE && rc != SQLITE_ROW)
    throw Error(std::string(what) + ": " + (db ? sqlite3_errmsg(db) : "sqlite error"));
}

struct Stmt {
  sqlite3_stmt* s = nullptr;
  Stmt(sqlite3* db, const char* sql) { check(sqlite3_prepare_v2(db, sql, -1, &s, nullptr), db, "prepare"); }
  ~Stmt() { sqlite3_finalize(s); }
  void bind(int i, const std::string& v) { sqlite3_bind_text(s, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT); }
};

}  // namespace

Store::Store(const fs::path& data_dir) : dir_(data_dir) {
  fs::create_directories(dir_ / "blobs");
  check(sqlite3_open((dir_ / "sessions.sqlite").string().c_str(), &db_), db_, "open store");
  check(sqlite3_exec(db_,
                     "PRAGMA journal_mode=WAL;"
                     "CREATE TABLE IF NOT EXISTS kv (ns TEXT NOT NULL, key TEXT NOT NULL, "
                     "value TEXT NOT NULL, PRIMARY KEY (ns, key));",
                     nullptr, nullptr, nullptr),
        db_, "init store");
}

Store::~Store() { sqlite3_close(db_); }

void Store::put(const std::string& ns, const std::string& key, const std::string& value) {
  std::lock_guard lock(mu_);
  Stmt st(db_, "INSERT OR REPLACE INTO kv (ns, key, value) VALUES (?1, ?2, ?3)");
  st.bind(1, ns);
  st.bind(2, key);
  st.bind(3, value);
  check(sqlite3_step(st.s), db_, "put");
}

bool Store::put_if_absent(const std::string& ns, const std::string& key, const std::string& value) {
  std::lock_guard lock(mu_);
  Stmt st(db_, "INSERT OR IGNORE INTO kv (ns, key, value) VALUES (?1, ?2, ?3)");
  st.bind(1, ns);
  st.bind(2, key);
  st.bind(3, value);
  check(sqlite3_step(st.s), db_, "put");
  return sqlite3_changes(db_) == 1;
}

std::optional<std::string> Store::get(const std::string& ns, const std::string& key) const {
  std::lock_guard lock(mu_);
  Stmt st(db_, "SELECT value FROM kv WHERE ns = ?1 AND key = ?2");
  st.bind(1, ns);
  st.bind(2, key);
  const int rc = sqlite3_step(st.s);
  check(rc, db_, "get");
  if (rc != SQLITE_ROW) return std::nullopt;
  const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st.s, 0));
  return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(st.s, 0)));
}

std::string Store::put_blob(std::span<const std::uint8_t> bytes, const std::string& ext) {
  const std::string sha = sha256_hex(bytes);
  const fs::path path = dir_ / "blobs" / (sha + ext);
  std::lock_guard lock(mu_);
  if (!fs::exists(path)) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error("cannot write blob " + tmp.string());
    }
    fs::rename(tmp, path);
  }
  return sha;
}

std::optional<std::vector<std::uint8_t>> Store::get_blob(const std::string& sha,
                                                         const std::string& ext) const {
  for (char c : sha)
    if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
  std::ifstream in(dir_ / "blobs" / (sha + ext), std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------
// Service

namespace {

struct HttpError {
  int status;
  std::string message;
};

Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

text::Words words_field(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return {};
  const auto& v = body.at(key);
  if (v.is_string()) return text::normalized_words(v.get<std::string>());
  if (v.is_array()) {
    text::Words out;
    for (const auto& w : v) {
      auto n = text::normalize_word(w.get<std::string>());
      if (!n.empty()) out.push_back(std::move(n));
    }
    return out;
  }
  throw HttpError{400, std::string("field '") + key + "' must be a string or a list of words"};
}

// Resolves source/target from the body, falling back to the session, and
// stores them back. target may stay empty unless required.
std::pair<text::Words, text::Words> resolve_pair(json& session, const json& body, bool need_target) {
  text::Words source = words_field(body, "source");
  text::Words target = words_field(body, "target");
  if (source.empty() && session.contains("source") && session["source"].is_array())
    source = session["source"].get<text::Words>();
  if (target.empty() && session.contains("target") && session["target"].is_array())
    target = session["target"].get<text::Words>();
  if (source.empty()) throw HttpError{422, "source attribute is required"};
  if (need_target && target.empty()) throw HttpError{422, "target attribute is required"};
  if (!target.empty()) {
    try {
      AttributePair{source, target}.validate();
    } catch (const Error& e) {
      throw HttpError{422, e.what()};
    }
  }
  session["source"] = source;
  session["target"] = target.empty() ? json(nullptr) : json(target);
  return {source, target};
}

template <typename T>
std::optional<T> opt_field(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw HttpError{400, std::string("field '") + key + "' has the wrong type"};
  }
}

Response guarded(const std::function<Response()>& fn) {
  try {
    return fn();
  } catch (const HttpError& e) {
    return error_response(e.status, e.message);
  } catch (const GatewayError& e) {
    return error_response(502, e.what());
  } catch (const PreconditionError& e) {
    return error_response(422, e.what());
  } catch (const ContractError& e) {
    return error_response(422, e.what());
  } catch (const VocabularyError& e) {
    return error_response(422, e.what());
  } catch (const NoMatchError& e) {
    return error_response(422, e.what());
  } catch (const CapabilityError& e) {
    return error_response(422, e.what());
  } catch (const ConfigError& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace

Service::Service(Gateway gateway, edit::BackendRegistry registry, ServiceOptions options)
    : gateway_(std::move(gateway)),
      registry_(std::move(registry)),
      options_(std::move(options)),
      store_(options_.data_dir) {
  if (options_.queue_depth < 1) throw ConfigError("service.queue_depth must be >= 1");
  if (options_.config.is_null()) options_.config = config::defaults();
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() { stop(); }

void Service::stop() {
  {
    std::lock_guard lock(queue_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::shared_ptr<std::mutex> Service::session_mutex(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto& m = session_locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

std::optional<json> Service::load_session(const std::string& id) const {
  auto raw = store_.get("session", id);
  if (!raw) return std::nullopt;
  return json::parse(*raw);
}

void Service::save_session(const json& session) {
  store_.put("session", session.at("id").get<std::string>(), session.dump());
}

Image Service::session_image(const json& session) const {
  const auto sha = session.at("image").at("sha256").get<std::string>();
  auto bytes = store_.get_blob(sha, ".png");
  if (!bytes) throw Error("image blob " + sha + " is missing from the store");
  return decode_png(*bytes);
}

Response Service::with_idempotency(const std::string& key, const std::string& scope,
                                   const std::function<Response()>& fn) {
  if (key.empty()) return fn();
  const std::string k = scope + "\n" + key;
  auto mu = session_mutex("idem\n" + k);
  std::lock_guard lock(*mu);
  if (auto prior = store_.get("idem", k)) {
    const json j = json::parse(*prior);
    return {j.at("status").get<int>(), j.at("body")};
  }
  Response r = fn();
  if (r.status < 500 && r.status != 503)
    store_.put("idem", k, json{{"status", r.status}, {"body", r.body}}.dump());
  return r;
}

Response Service::create_session(const Image& image, const json& body) {
  return guarded([&] {
    if (image.empty()) throw HttpError{400, "image is empty"};
    json session = {{"id", ""},
                    {"created_at", now_iso()},
                    {"source", nullptr},
                    {"target", nullptr},
                    {"prompt", nullptr},
                    {"prompt_origin", nullptr},
                    {"injection", nullptr},
                    {"optimization", nullptr},
                    {"filter", nullptr},
                    {"results", json::array()}};
    if (body.contains("source") || body.contains("target")) {
      const auto target = words_field(body, "target");
      resolve_pair(session, body, !target.empty());
    }
    const std::string sha = store_.put_blob(encode_png(image), ".png");
    session["image"] = {{"sha256", sha}, {"width", image.width}, {"height", image.height}};
    std::string id;
    do {
      id = new_session_id();
      session["id"] = id;
    } while (!store_.put_if_absent("session", id, session.dump()));
    return Response{201, session};
  });
}

Response Service::get_session(const std::string& id) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    return Response{200, *s};
  });
}

Response Service::inject(const std::string& id, const json& body) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    json session = *s;
    const auto [source, target] = resolve_pair(session, body, false);

    injector::InjectorConfig cfg = config::injector_config(options_.config);
    if (auto b = opt_field<int>(body, "continuation_budget")) cfg.continuation_budget = *b;
    cfg.synonym_index_override = opt_field<int>(body, "synonym_index");

    const InjectionReport report = injector::inject(session_image(session), source, gateway_, cfg);
    session["injection"] = report;
    session["prompt"] = report.chosen;
    session["prompt_origin"] = "inject";
    save_session(session);
    return Response{200, json(report)};
  });
}

Response Service::optimize(const std::string& id, const json& body) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    json session = *s;
    const auto [source, target] = resolve_pair(session, body, false);

    json cfg_tree = options_.config;
    for (const char* k : {"num_tokens", "steps", "learning_rate", "location"})
      if (body.contains(k)) cfg_tree["optimizer"][k] = body.at(k);
    if (body.contains("seed")) cfg_tree["seed"] = body.at("seed");
    const auto cfg = config::optimizer_config(cfg_tree);

    optimizer::HardPromptOptimizer opt(*gateway_.encoder, cfg, config::exec_mode(options_.config));
    const auto result = opt.optimize(session_image(session), source);
    std::ostringstream trace;
    optimizer::write_trace_jsonl(result.trace, trace);
    const std::string t = trace.str();
    const std::string trace_ref =
        store_.put_blob({reinterpret_cast<const std::uint8_t*>(t.data()), t.size()}, ".jsonl");

    json out = {{"prompt", result.prompt},
                {"score", result.score},
                {"num_tokens", cfg.num_tokens},
                {"steps", cfg.steps},
                {"learning_rate", cfg.learning_rate},
                {"location", optimizer::to_string(cfg.location)},
                {"seed", cfg.seed},
                {"trace_ref", trace_ref}};
    session["optimization"] = out;
    session["prompt"] = result.prompt;
    session["prompt_origin"] = "optimize";
    save_session(session);
    return Response{200, out};
  });
}

Response Service::filter(const std::string& id, const json& body) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    json session = *s;

    const auto& enc = *gateway_.encoder;
    Prompt prompt;
    if (auto text = opt_field<std::string>(body, "prompt"))
      prompt = enc.tokenizer().make_prompt(*text);
    else if (session["prompt"].is_object())
      prompt = enc.tokenizer().retokenize(session["prompt"].get<Prompt>());
    else
      throw HttpError{409, "session has no prompt yet; run inject or optimize, or pass one"};

    text::Words protect = words_field(body, "protect");
    if (protect.empty() && session["source"].is_array()) protect = session["source"].get<text::Words>();
    const auto keep = filter::protect_words(prompt, protect);
    const auto result = filter::filter(prompt, session_image(session), enc, keep,
                                       config::exec_mode(options_.config));
    session["filter"] = result;
    session["prompt"] = result.prompt;
    session["prompt_origin"] = "filter";
    save_session(session);
    return Response{200, json(result)};
  });
}

Response Service::edit(const std::string& id, const json& body) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    json session = *s;
    const auto [source, target] = resolve_pair(session, body, true);
    const auto& enc = *gateway_.encoder;
    const Image image = session_image(session);

    const auto candidate = opt_field<std::string>(body, "candidate");
    if (candidate && *candidate != "truncated" && *candidate != "append")
      throw HttpError{400, "candidate must be truncated or append"};

    Prompt prompt;
    std::string origin;
    if (auto k = opt_field<int>(body, "synonym_index")) {
      injector::InjectorConfig cfg = config::injector_config(options_.config);
      cfg.synonym_index_override = *k;
      const InjectionReport report = injector::inject(image, source, gateway_, cfg);
      session["injection"] = report;
      prompt = report.chosen;
      origin = "inject";
    }
    if (candidate) {
      if (!session["injection"].is_object())
        throw HttpError{409, "no injection report to pick a candidate from"};
      const auto report = session["injection"].get<InjectionReport>();
      if (*candidate == "truncated") {
        if (!report.truncated_candidate) throw HttpError{422, "the report has no truncated candidate"};
        prompt = *report.truncated_candidate;
      } else {
        prompt = report.append_candidate;
      }
      origin = "user";
    } else if (origin.empty()) {
      if (auto text = opt_field<std::string>(body, "prompt")) {
        prompt = enc.tokenizer().make_prompt(*text);
        origin = "user";
      } else if (session["prompt"].is_object()) {
        prompt = session["prompt"].get<Prompt>();
        origin = session["prompt_origin"].is_string() ? session["prompt_origin"].get<std::string>() : "user";
      } else {
        throw HttpError{409, "session has no prompt yet; run inject or optimize, or pass one"};
      }
    }

    const Prompt source_prompt = enc.tokenizer().retokenize(prompt);
    const Prompt edited = edit::build_edited_prompt(source_prompt, AttributePair{source, target},
                                                    enc.tokenizer());

    const std::string backend =
        opt_field<std::string>(body, "backend")
            .value_or(config::get_path(options_.config, "edit.backend").get<std::string>());
    if (!registry_.contains(backend)) registry_.get(backend);  // throws CapabilityError

    json sampler_tree = options_.config;
    if (body.contains("sampler") && body.at("sampler").is_object())
      config::merge(sampler_tree["sampler"], body.at("sampler"));
    const edit::SamplerConfig sampler = config::sampler_config(sampler_tree);

    std::lock_guard qlock(queue_mu_);
    if (stopping_) throw HttpError{503, "service is shutting down"};
    if (static_cast<int>(queue_.size()) >= options_.queue_depth)
      throw HttpError{503, "edit queue is full (" + std::to_string(options_.queue_depth) + " waiting)"};

    const int index = static_cast<int>(session["results"].size());
    session["prompt"] = prompt;
    session["prompt_origin"] = origin;
    session["results"].push_back({{"index", index},
                                  {"status", "queued"},
                                  {"backend", backend},
                                  {"source_prompt", source_prompt},
                                  {"edited_prompt", edited},
                                  {"sampler", sampler}});
    save_session(session);
    queue_.push_back(Job{id, index, edit::EditJob{image, source_prompt, edited, backend, sampler}});
    queue_cv_.notify_one();
    return Response{202, json{{"result_index", index}, {"status", "queued"}}};
  });
}

Response Service::get_result(const std::string& id, int index) {
  return guarded([&] {
    auto mu = session_mutex(id);
    std::lock_guard lock(*mu);
    auto s = load_session(id);
    if (!s) throw HttpError{404, "unknown session '" + id + "'"};
    const auto& results = (*s)["results"];
    if (index < 0 || index >= static_cast<int>(results.size()))
      throw HttpError{404, "no result " + std::to_string(index)};
    json r = results[static_cast<std::size_t>(index)];
    if (r.value("status", "") == "done") {
      auto bytes = store_.get_blob(r.at("image").at("sha256").get<std::string>(), ".png");
      if (bytes) r["image_png_base64"] = base64_encode(*bytes);
    }
    return Response{200, r};
  });
}

void Service::drain() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && running_ == 0; });
}

void Service::worker_loop() {
  while (true) {
    Job job;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      ++running_;
    }
    run_job(std::move(job));
    {
      std::lock_guard lock(queue_mu_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

void Service::run_job(Job job) {
  auto update = [&](const std::function<void(json&)>& fn) {
    auto mu = session_mutex(job.session_id);
    std::lock_guard lock(*mu);
    auto s = load_session(job.session_id);
    if (!s) return;
    fn((*s)["results"][static_cast<std::size_t>(job.index)]);
    save_session(*s);
  };
  update([](json& r) { r["status"] = "running"; });
  try {
    const auto& enc = *gateway_.encoder;
    edit::EditScheduler scheduler(1);
    const edit::EditResult result = scheduler.run(job.job, registry_, &enc);
    const double clip = clip_score(enc.encode_text(job.job.edited_prompt), enc.encode_image(result.output));
    const Image reference =
        resize_bilinear(job.job.image, job.job.sampler.resolution, job.job.sampler.resolution);
    const double lpips = gateway_.metric->distance(reference, result.output);
    const std::string sha = store_.put_blob(encode_png(result.output), ".png");
    update([&](json& r) {
      r["status"] = "done";
      r["image"] = {{"sha256", sha}, {"width", result.output.width}, {"height", result.output.height}};
      r["clip_score"] = clip;
      r["lpips"] = lpips;
      r["backend_metadata"] = result.backend_metadata;
      r["wall_time"] = result.wall_time;
    });
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    update([&](json& r) {
      r["status"] = "failed";
      r["error"] = msg;
    });
  }
}

void Service::install(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse_body = [](const httplib::Request& req) -> json {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw HttpError{400, "body must be a JSON object"};
    return j;
  };
  auto handle = [=](httplib::Response& res, const std::function<Response()>& fn) {
    try {
      reply(res, fn());
    } catch (const HttpError& e) {
      reply(res, error_response(e.status, e.message));
    }
  };
  auto idem_key = [](const httplib::Request& req) { return req.get_header_value("Idempotency-Key"); };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/healthz", [=, this](const httplib::Request&, httplib::Response& res) {
    reply(res, {200, json{{"status", "ok"}, {"backend", gateway_.backend}}});
  });

  server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      return with_idempotency(idem_key(req), "POST /sessions", [&] {
        json body = json::object();
        Image image;
        try {
          if (req.is_multipart_form_data()) {
            if (!req.has_file("image")) throw HttpError{400, "multipart field 'image' is required"};
            const auto& content = req.get_file_value("image").content;
            image = decode_png({reinterpret_cast<const std::uint8_t*>(content.data()), content.size()});
            for (const char* k : {"source", "target"})
              if (req.has_file(k)) body[k] = req.get_file_value(k).content;
          } else {
            body = parse_body(req);
            if (!body.contains("image_png_base64")) throw HttpError{400, "image_png_base64 is required"};
            image = decode_png(base64_decode(body.at("image_png_base64").get<std::string>()));
          }
        } catch (const Error& e) {
          throw HttpError{400, std::string("cannot read image: ") + e.what()};
        }
        return create_session(image, body);
      });
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_session(req.matches[1]));
  });

  using Handler = Response (Service::*)(const std::string&, const json&);
  const std::pair<const char*, Handler> mutating[] = {{"inject", &Service::inject},
                                                      {"optimize", &Service::optimize},
                                                      {"filter", &Service::filter},
                                                      {"edit", &Service::edit}};
  for (const auto& [name, fn] : mutating) {
    const std::string route = std::string(R"(/sessions/([0-9a-f]+)/)") + name;
    server.Post(route, [=, this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const std::string id = req.matches[1];
        return with_idempotency(idem_key(req), "POST " + id + "/" + name, [&] {
          const json body = parse_body(req);
          return (this->*fn)(id, body);
        });
      });
    });
  }

  server.Get(R"(/sessions/([0-9a-f]+)/results/(\d+))",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               int n = -1;
               try {
                 n = std::stoi(req.matches[2]);
               } catch (const std::exception&) {
               }
               reply(res, get_result(req.matches[1], n));
             });

  server.Get(R"(/images/([0-9a-f]{64}))", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto bytes = store_.get_blob(req.matches[1], ".png");
    if (!bytes) {
      reply(res, error_response(404, "unknown image"));
      return;
    }
    res.set_content(std::string(bytes->begin(), bytes->end()), "image/png");
  });
}

int serve(const json& cfg, std::ostream& log) {
  const Gateway gateway = make_gateway(config::get_path(cfg, "gateway"));
  auto registry = edit::BackendRegistry::with_builtins(gateway, config::get_path(cfg, "backends"));
  ServiceOptions opts;
  opts.data_dir = config::get_path(cfg, "service.data_dir").get<std::string>();
  opts.queue_depth = config::get_path(cfg, "service.queue_depth").get<int>();
  opts.config = cfg;
  Service service(gateway, std::move(registry), opts);

  httplib::Server server;
  service.install(server);
  const std::string host = config::get_path(cfg, "service.host").get<std::string>();
  const int port = config::get_path(cfg, "service.port").get<int>();
  log << "promptsmith service listening on " << host << ":" << port << " (gateway "
      << gateway.backend << ", data " << opts.data_dir.string() << ")" << std::endl;
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace promptsmith::service
