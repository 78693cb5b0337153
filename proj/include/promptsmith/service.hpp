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

// HTTP/JSON API over the pipeline, used by the web UI.
//
//   GET  /healthz
//   POST /sessions                      PNG upload (multipart field "image", or
//                                       JSON {"image_png_base64", "source"?, "target"?})
//                                       -> 201 session
//   GET  /sessions/{id}                 -> session
//   POST /sessions/{id}/inject          {"source", "target"?, "synonym_index"?,
//                                        "continuation_budget"?} -> InjectionReport
//   POST /sessions/{id}/optimize        {"source", "target"?, "num_tokens"?, "steps"?,
//                                        "learning_rate"?, "location"?, "seed"?}
//   POST /sessions/{id}/filter          {"prompt"?, "protect"?}
//   POST /sessions/{id}/edit            {"prompt"?, "candidate"?, "synonym_index"?,
//                                        "source"?, "target"?, "backend"?, "sampler"?}
//                                       -> 202 {"result_index"}
//   GET  /sessions/{id}/results/{n}     -> edit result (image inline once done)
//   GET  /images/{sha256}               -> image/png
//
// Errors: 400 malformed body, 404 unknown session or result, 409 edit before
// any prompt exists, 422 invalid attribute pair, 503 edit queue full.
// Mutating requests carrying an Idempotency-Key header are executed once;
// repeats get the first response back.
//
// Sessions live in a SQLite key-value table under data_dir; images and
// optimizer traces are stored content-addressed (sha256) next to it.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "promptsmith/core.hpp"
#include "promptsmith/edit_orchestrator.hpp"
#include "promptsmith/gateway.hpp"

struct sqlite3;

namespace httplib {
class Server;
}

namespace promptsmith::service {

// Namespaced string KV table plus a content-addressed blob directory.
class Store {
 public:
  explicit Store(const std::filesystem::path& data_dir);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void put(const std::string& ns, const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& ns, const std::string& key) const;
  // Inserts only if absent; returns false when the key already existed.
  bool put_if_absent(const std::string& ns, const std::string& key, const std::string& value);

  // Returns the sha256 of bytes; identical content is stored once.
  std::string put_blob(std::span<const std::uint8_t> bytes, const std::string& ext);
  std::optional<std::vector<std::uint8_t>> get_blob(const std::string& sha,
                                                    const std::string& ext) const;

  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

struct ServiceOptions {
  std::filesystem::path data_dir = "promptsmith-data";
  int queue_depth = 4;
  // Full config tree; optimizer, injector, sampler and edit.backend defaults
  // are read from it.
  json config;
};

struct Response {
  int status = 200;
  json body;
};

class Service {
 public:
  Service(Gateway gateway, edit::BackendRegistry registry, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void install(httplib::Server& server);

  // Route handlers, callable without HTTP.
  Response create_session(const Image& image, const json& body);
  Response get_session(const std::string& id);
  Response inject(const std::string& id, const json& body);
  Response optimize(const std::string& id, const json& body);
  Response filter(const std::string& id, const json& body);
  Response edit(const std::string& id, const json& body);
  Response get_result(const std::string& id, int index);

  // Blocks until every queued edit has finished.
  void drain();
  void stop();

  const Store& store() const { return store_; }

 private:
  struct Job {
    std::string session_id;
    int index = 0;
    edit::EditJob job;
  };

  std::shared_ptr<std::mutex> session_mutex(const std::string& id);
  std::optional<json> load_session(const std::string& id) const;
  void save_session(const json& session);
  Image session_image(const json& session) const;
  Response with_idempotency(const std::string& key, const std::string& scope,
                            const std::function<Response()>& fn);
  void worker_loop();
  void run_job(Job job);

  Gateway gateway_;
  edit::BackendRegistry registry_;
  ServiceOptions options_;
  Store store_;

  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
  std::mutex idem_mu_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<Job> queue_;
  int running_ = 0;
  bool stopping_ = false;
  std::thread worker_;
};

// Reads service.* from the config tree, builds the gateway and backend
// registry, and serves until the process is stopped.
int serve(const json& config, std::ostream& log);

}  // namespace promptsmith::service
