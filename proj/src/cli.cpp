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

#include "promptsmith/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "promptsmith/captioning_injector.hpp"
#include "promptsmith/config.hpp"
#include "promptsmith/digest.hpp"
#include "promptsmith/edit_orchestrator.hpp"
#include "promptsmith/errors.hpp"
#include "promptsmith/eval_harness.hpp"
#include "promptsmith/hard_prompt_optimizer.hpp"
#include "promptsmith/mock_gateway.hpp"
#include "promptsmith/service.hpp"
#include "promptsmith/token_filter.hpp"

namespace promptsmith::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  std::string command;
  json cfg;
  fs::path out_dir;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;
  bool record_written = false;
};

struct Options {
  // global
  std::string config_path;
  std::uint64_t seed = 0;
  std::string gateway;
  std::string out_dir;
  std::string exec;
  bool compact = false;
  std::vector<std::string> sets;

  // shared by subcommands
  std::string image;
  std::string source_word;
  std::string target_word;
  std::string prompt;

  int synonym_index = 0;
  int continuation_budget = 0;
  int num_tokens = 0;
  int steps = 0;
  double learning_rate = 0.0;
  std::string location;
  std::string protect;
  std::string backend;
  std::string sdedit_t;
  std::string output;
  std::string manifest;
  std::string methods = "one_noun,full_nouns,full_description,caption,optimize";
  int pool_size = 1;
  std::string host;
  int port = 0;
  std::string data_dir;
  std::uint64_t fixture_seed = mock::kDefaultFixtureSeed;
  std::string out;
  int width = 64;
  int height = 64;
};

json parse_value(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) return raw;
  return v;
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string inputs_digest(const std::vector<std::string>& args, const std::vector<fs::path>& inputs) {
  Sha256 h;
  for (const auto& a : args) {
    h.update(a);
    h.update(std::string_view("\0", 1));
  }
  for (const auto& p : inputs) {
    h.update(p.string());
    h.update(std::string_view("\0", 1));
    std::ifstream in(p, std::ios::binary);
    if (!in) continue;
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    h.update(bytes);
  }
  return h.hex();
}

void write_run_record(const Context& ctx, const std::vector<std::string>& args, int exit_code,
                      const std::string& error, double seconds) {
  static std::atomic<int> counter{0};
  std::error_code ec;
  fs::create_directories(ctx.out_dir / "runs", ec);
  if (ec) return;
  json rec = {{"command", ctx.command},
              {"args", args},
              {"config", ctx.cfg},
              {"inputs", json::array()},
              {"inputs_digest", inputs_digest(args, ctx.inputs)},
              {"outputs", ctx.outputs},
              {"timings", {{"total_s", seconds}}},
              {"tool_version", kToolVersion},
              {"exit_code", exit_code}};
  for (const auto& p : ctx.inputs) rec["inputs"].push_back(p.string());
  if (!error.empty()) rec["error"] = error;
  const std::string name = "run-" + utc_stamp() + "-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter.fetch_add(1)) + ".json";
  std::ofstream(ctx.out_dir / "runs" / name) << rec.dump(2) << '\n';
}

void write_output(Context& ctx, const std::string& name, const std::string& content) {
  fs::create_directories(ctx.out_dir);
  const fs::path p = ctx.out_dir / name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write '" + p.string() + "'");
  ctx.outputs.push_back(p.string());
}

Image load_image(Context& ctx, const std::string& path) {
  ctx.inputs.emplace_back(path);
  return read_png(path);
}

text::Words attr_words(const std::string& s, const char* flag) {
  auto w = text::normalized_words(s);
  if (w.empty()) throw PreconditionError(std::string(flag) + " must name at least one word");
  return w;
}

std::string sanitize(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return s;
}

// --- commands ---------------------------------------------------------------

json cmd_caption(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const Image image = load_image(ctx, o.image);
  return json{{"caption", gw.captioner->generate(image)}};
}

json cmd_inject(Context& ctx, const Options& o, const CLI::App& sub) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const Image image = load_image(ctx, o.image);
  auto cfg = config::injector_config(ctx.cfg);
  if (sub.count("--synonym-index")) cfg.synonym_index_override = o.synonym_index;
  const auto source = attr_words(o.source_word, "--source-word");
  if (!o.target_word.empty()) AttributePair{source, attr_words(o.target_word, "--target-word")}.validate();
  return json(injector::inject(image, source, gw, cfg));
}

json cmd_optimize(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const Image image = load_image(ctx, o.image);
  const auto cfg = config::optimizer_config(ctx.cfg);
  const optimizer::HardPromptOptimizer opt(*gw.encoder, cfg, config::exec_mode(ctx.cfg));
  const auto result = opt.optimize(image, attr_words(o.source_word, "--source-word"));

  std::ostringstream trace;
  optimizer::write_trace_jsonl(result.trace, trace);
  write_output(ctx, "trace.jsonl", trace.str());
  int best_step = 0;
  for (const auto& r : result.trace)
    if (r.score == result.score) {
      best_step = r.step;
      break;
    }
  return json{{"prompt", result.prompt},
              {"score", result.score},
              {"best_step", best_step},
              {"num_tokens", cfg.num_tokens},
              {"steps", cfg.steps},
              {"learning_rate", cfg.learning_rate},
              {"location", optimizer::to_string(cfg.location)},
              {"seed", cfg.seed},
              {"trace", "trace.jsonl"}};
}

json cmd_filter(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const Image image = load_image(ctx, o.image);
  const auto& enc = *gw.encoder;
  const Prompt prompt = enc.tokenizer().make_prompt(o.prompt);
  const std::string protect = o.protect.empty() ? o.source_word : o.protect;
  const auto keep = filter::protect_words(prompt, text::normalized_words(protect));
  return json(filter::filter(prompt, image, enc, keep, config::exec_mode(ctx.cfg)));
}

json cmd_edit(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const auto registry = edit::BackendRegistry::with_builtins(gw, config::get_path(ctx.cfg, "backends"));
  const std::string backend = config::get_path(ctx.cfg, "edit.backend").get<std::string>();
  registry.get(backend);

  const Image image = load_image(ctx, o.image);
  const AttributePair pair{attr_words(o.source_word, "--source-word"),
                           attr_words(o.target_word, "--target-word")};
  pair.validate();
  const auto& enc = *gw.encoder;

  Prompt source;
  std::string origin = "user";
  json injection;
  if (o.prompt.empty()) {
    const auto report = injector::inject(image, pair.source, gw, config::injector_config(ctx.cfg));
    source = enc.tokenizer().retokenize(report.chosen);
    origin = "inject";
    injection = report;
  } else {
    source = enc.tokenizer().make_prompt(o.prompt);
  }
  const Prompt edited = edit::build_edited_prompt(source, pair, enc.tokenizer());
  const edit::EditJob job{image, source, edited, backend, config::sampler_config(ctx.cfg)};
  const edit::EditResult result = edit::run_edit(job, registry, &enc);

  const std::string out_name = o.output.empty() ? "edited.png" : o.output;
  const auto png = encode_png(result.output);
  write_output(ctx, out_name, std::string(png.begin(), png.end()));

  const Image reference = resize_bilinear(image, job.sampler.resolution, job.sampler.resolution);
  json j = result;
  j["prompt_origin"] = origin;
  if (!injection.is_null()) j["injection"] = injection;
  j["output"] = out_name;
  j["clip_score"] = clip_score(enc.encode_text(edited), enc.encode_image(result.output));
  j["lpips"] = gw.metric->distance(reference, result.output);
  j["metric"] = gw.metric->name();
  return j;
}

json cmd_bench(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  const auto registry = edit::BackendRegistry::with_builtins(gw, config::get_path(ctx.cfg, "backends"));
  ctx.inputs.emplace_back(o.manifest);
  const eval::Dataset ds = eval::load_manifest(o.manifest);
  for (const auto& s : ds.samples) ctx.inputs.emplace_back(fs::path(o.manifest).parent_path() / s.image_ref);

  eval::EvalConfig ec;
  ec.backend_id = config::get_path(ctx.cfg, "edit.backend").get<std::string>();
  ec.sampler = config::sampler_config(ctx.cfg);
  ec.optimizer = config::optimizer_config(ctx.cfg);
  ec.injector = config::injector_config(ctx.cfg);
  ec.seed = ctx.cfg.at("seed").get<std::uint64_t>();
  ec.pool_size = config::get_path(ctx.cfg, "edit.pool_size").get<int>();
  ec.exec = config::exec_mode(ctx.cfg);

  std::vector<std::string> methods;
  std::stringstream ss(o.methods);
  for (std::string m; std::getline(ss, m, ',');)
    if (!m.empty()) methods.push_back(m);
  if (methods.empty()) throw PreconditionError("--methods lists no method");

  json out = {{"manifest_samples", ds.samples.size()}, {"backend", ec.backend_id}, {"reports", json::array()}};
  std::vector<eval::MetricReport> reports;
  for (const auto& m : methods) {
    auto report = eval::evaluate_method(m, ds, registry, gw, ec);
    const std::string stem = "bench/report-" + sanitize(m);
    write_output(ctx, stem + ".json", json(report).dump(2) + "\n");
    std::ostringstream csv;
    eval::write_report_csv(report, csv);
    write_output(ctx, stem + ".csv", csv.str());
    out["reports"].push_back(report);
    reports.push_back(std::move(report));
  }
  if (reports.size() >= 2) {
    const auto curve = eval::tradeoff_curve(reports, ctx.out_dir / "bench");
    ctx.outputs.push_back(curve.data_path.string());
    ctx.outputs.push_back(curve.plot_path.string());
    json pts = json::array();
    for (const auto& p : curve.points)
      pts.push_back({{"method_id", p.method_id}, {"clip_score_mean", p.clip_score_mean}, {"lpips_mean", p.lpips_mean}});
    out["curve"] = {{"points", pts}, {"data", "bench/tradeoff.csv"}, {"plot", "bench/tradeoff.svg"}};
  }
  return out;
}

json cmd_fixture(Context& ctx, const Options& o) {
  const auto f = mock::generate_fixture(o.fixture_seed);
  mock::save_fixture(f, o.out);
  ctx.outputs.push_back(o.out);
  return json{{"fixture", o.out}, {"seed", f.seed}, {"vocab_size", f.vocab.size()}, {"dim", f.dim}};
}

json cmd_render(Context& ctx, const Options& o) {
  const Gateway gw = make_gateway(config::get_path(ctx.cfg, "gateway"));
  if (gw.backend != "mock") throw CapabilityError("render needs the mock gateway");
  const Prompt p = gw.encoder->tokenizer().make_prompt(o.prompt);
  const Image img = mock::render_image(gw.encoder->encode_text(p), o.width, o.height);
  write_png(img, o.out);
  ctx.outputs.push_back(o.out);
  return json{{"image", o.out}, {"prompt", p}, {"width", img.width}, {"height", img.height}};
}

std::string find_out_dir(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--out-dir=")) return args[i].substr(10);
  }
  return {};
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const std::map<std::string, std::string>& env) {
  const auto t0 = std::chrono::steady_clock::now();
  Options o;
  Context ctx;

  CLI::App app{"Source-prompt generation and attribute editing for text-guided image editors",
               "promptsmith"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  auto* seed_opt = app.add_option("--seed", o.seed, "Seed for every random choice");
  app.add_option("--config", o.config_path, "JSON config file");
  auto* gw_opt = app.add_option("--gateway", o.gateway, "Model gateway backend")
                     ->check(CLI::IsMember({"mock", "clip_blip", "custom"}));
  auto* out_dir_opt = app.add_option("--out-dir", o.out_dir, "Directory for outputs and run records");
  auto* exec_opt = app.add_option("--exec", o.exec, "Kernel execution")->check(CLI::IsMember({"serial", "parallel"}));
  app.add_flag("--json", o.compact, "Print the result as one line of JSON");
  app.add_option("--set", o.sets, "Config override key=value (repeatable)");

  auto* caption = app.add_subcommand("caption", "Caption an image");
  caption->add_option("--image", o.image, "Input PNG")->required();

  auto* inject = app.add_subcommand("inject", "Build a source prompt by injecting the source word into a caption");
  inject->add_option("--image", o.image, "Input PNG")->required();
  inject->add_option("--source-word", o.source_word, "Source attribute")->required();
  inject->add_option("--target-word", o.target_word, "Target attribute (validated only)");
  inject->add_option("--synonym-index", o.synonym_index, "Force the synonym window start")
      ->check(CLI::NonNegativeNumber);
  auto* budget_opt = inject->add_option("--continuation-budget", o.continuation_budget,
                                        "Words the captioner may add after the attribute")
                         ->check(CLI::NonNegativeNumber);

  auto* optimize = app.add_subcommand("optimize", "Optimize a hard prompt that keeps the source word");
  optimize->add_option("--image", o.image, "Input PNG")->required();
  optimize->add_option("--source-word", o.source_word, "Source attribute")->required();
  auto* nt_opt = optimize->add_option("--num-tokens", o.num_tokens, "Prompt length M");
  auto* steps_opt = optimize->add_option("--steps", o.steps, "Optimization steps");
  auto* lr_opt = optimize->add_option("--lr", o.learning_rate, "Learning rate");
  auto* loc_opt = optimize->add_option("--location", o.location, "Where the source word sits")
                      ->check(CLI::IsMember({"start", "middle", "end"}));

  auto* filt = app.add_subcommand("filter", "Remove words whose ablation raises the image-text score");
  filt->add_option("--image", o.image, "Input PNG")->required();
  filt->add_option("--prompt", o.prompt, "Prompt to filter")->required();
  filt->add_option("--source-word", o.source_word, "Source attribute (protected)");
  filt->add_option("--protect", o.protect, "Words never removed (defaults to the source word)");

  auto* edit_cmd = app.add_subcommand("edit", "Edit an image by swapping the source word for the target word");
  edit_cmd->add_option("--image", o.image, "Input PNG")->required();
  edit_cmd->add_option("--source-word", o.source_word, "Source attribute")->required();
  edit_cmd->add_option("--target-word", o.target_word, "Target attribute")->required();
  edit_cmd->add_option("--prompt", o.prompt, "Source prompt (default: run inject)");
  auto* backend_opt = edit_cmd->add_option("--backend", o.backend, "Editing backend id");
  auto* sdedit_opt = edit_cmd->add_option("--sdedit-t", o.sdedit_t, "SDEdit strength in (0,1] or auto");
  edit_cmd->add_option("--output", o.output, "Output PNG name inside --out-dir");

  auto* bench = app.add_subcommand("bench", "Evaluate prompt methods on a manifest");
  bench->add_option("--manifest", o.manifest, "Benchmark manifest JSON")->required();
  bench->add_option("--methods", o.methods, "Comma-separated method ids");
  auto* bench_backend_opt = bench->add_option("--backend", o.backend, "Editing backend id");
  auto* pool_opt = bench->add_option("--pool-size", o.pool_size, "Concurrent backend calls")
                       ->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  auto* host_opt = serve->add_option("--host", o.host, "Bind address");
  auto* port_opt = serve->add_option("--port", o.port, "Port");
  auto* dd_opt = serve->add_option("--data-dir", o.data_dir, "Session store directory");

  auto* fixture = app.add_subcommand("fixture", "Write a mock gateway fixture");
  fixture->add_option("--out", o.out, "Output JSON path")->required();
  fixture->add_option("--fixture-seed", o.fixture_seed, "Fixture seed");

  auto* render = app.add_subcommand("render", "Render a mock image that depicts a prompt");
  render->add_option("--prompt", o.prompt, "Prompt in the mock vocabulary")->required();
  render->add_option("--out", o.out, "Output PNG path")->required();
  render->add_option("--width", o.width, "Width")->check(CLI::Range(8, 4096));
  render->add_option("--height", o.height, "Height")->check(CLI::Range(1, 4096));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    ctx.command = "usage";
    const std::string od = find_out_dir(args);
    ctx.out_dir = od.empty() ? config::defaults().at("out_dir").get<std::string>() : od;
    write_run_record(ctx, args, kUsageError, e.what(), 0.0);
    return kUsageError;
  }

  CLI::App* sub = app.get_subcommands().front();
  ctx.command = sub->get_name();

  int code = kOk;
  std::string error;
  try {
    config::Overrides ov;
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
      ov[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    if (seed_opt->count()) ov["seed"] = o.seed;
    if (gw_opt->count()) ov["gateway.backend"] = o.gateway;
    if (out_dir_opt->count()) ov["out_dir"] = o.out_dir;
    if (exec_opt->count()) ov["exec"] = o.exec;
    if (budget_opt->count()) ov["injector.continuation_budget"] = o.continuation_budget;
    if (nt_opt->count()) ov["optimizer.num_tokens"] = o.num_tokens;
    if (steps_opt->count()) ov["optimizer.steps"] = o.steps;
    if (lr_opt->count()) ov["optimizer.learning_rate"] = o.learning_rate;
    if (loc_opt->count()) ov["optimizer.location"] = o.location;
    if (backend_opt->count() || bench_backend_opt->count()) ov["edit.backend"] = o.backend;
    if (pool_opt->count()) ov["edit.pool_size"] = o.pool_size;
    if (sdedit_opt->count()) ov["sampler.sdedit_t"] = parse_value(o.sdedit_t);
    if (host_opt->count()) ov["service.host"] = o.host;
    if (port_opt->count()) ov["service.port"] = o.port;
    if (dd_opt->count()) ov["service.data_dir"] = o.data_dir;

    std::optional<fs::path> cfg_file;
    if (!o.config_path.empty()) {
      cfg_file = o.config_path;
      ctx.inputs.emplace_back(o.config_path);
    }
    ctx.cfg = config::resolve(cfg_file, env, ov);
    ctx.out_dir = ctx.cfg.at("out_dir").get<std::string>();

    json result;
    if (sub == caption) result = cmd_caption(ctx, o);
    else if (sub == inject) result = cmd_inject(ctx, o, *inject);
    else if (sub == optimize) result = cmd_optimize(ctx, o);
    else if (sub == filt) result = cmd_filter(ctx, o);
    else if (sub == edit_cmd) result = cmd_edit(ctx, o);
    else if (sub == bench) result = cmd_bench(ctx, o);
    else if (sub == fixture) result = cmd_fixture(ctx, o);
    else if (sub == render) result = cmd_render(ctx, o);
    else if (sub == serve) {
      write_run_record(ctx, args, kOk, "", 0.0);
      ctx.record_written = true;
      return service::serve(ctx.cfg, err);
    }

    write_output(ctx, ctx.command + ".json", result.dump(2) + "\n");
    out << (o.compact ? result.dump() : result.dump(2)) << '\n';
  } catch (const std::exception& e) {
    code = kDomainError;
    error = e.what();
    err << "promptsmith " << ctx.command << ": " << error << '\n';
  }

  if (!ctx.record_written) {
    if (ctx.out_dir.empty()) {
      const std::string od = find_out_dir(args);
      ctx.out_dir = od.empty() ? config::defaults().at("out_dir").get<std::string>() : od;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_record(ctx, args, code, error, secs);
  }
  return code;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return dispatch(args, out, err, config::process_environment());
}

}  // namespace promptsmith::cli
