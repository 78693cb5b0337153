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

#include "promptsmith/eval_harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "promptsmith/errors.hpp"
#include "promptsmith/random.hpp"
#include "promptsmith/token_filter.hpp"

namespace promptsmith::eval {

namespace fs = std::filesystem;

void validate_sample(const BenchmarkSample& s) {
  s.pair.validate();
  for (const auto& [level, prompt] : s.reference_prompts) {
    if (text::count_occurrences(text::normalized_words(prompt), s.pair.source) == 0)
      throw ContractError("sample '" + s.id + "': " + std::string(to_string(level)) +
                          " reference '" + prompt + "' lacks the source attribute");
  }
}

Dataset load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  const json manifest = json::parse(in);
  const fs::path base = path.parent_path();

  Dataset ds;
  for (const auto& js : manifest.at("samples")) {
    BenchmarkSample s;
    s.id = js.at("id").get<std::string>();
    s.image_ref = js.at("image").get<std::string>();
    const fs::path img_path = fs::path(s.image_ref).is_absolute() ? fs::path(s.image_ref)
                                                                  : base / s.image_ref;
    s.image = read_png(img_path);
    s.pair = AttributePair::from_strings(js.at("source").get<std::string>(),
                                         js.at("target").get<std::string>());
    const json refs = js.value("references", json::object());
    for (const auto& [k, v] : refs.items())
      s.reference_prompts[prompt_level_from_string(k)] = v.get<std::string>();
    const json external = js.value("external_prompts", json::object());
    for (const auto& [k, v] : external.items())
      s.external_prompts[k] = v.get<std::string>();
    const std::string prov = js.value("provenance", "real");
    if (prov != "real" && prov != "synthetic")
      throw ConfigError("sample '" + s.id + "': provenance must be real or synthetic");
    s.provenance = prov == "real" ? Provenance::kReal : Provenance::kSynthetic;
    validate_sample(s);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw ConfigError("manifest '" + path.string() + "' has no samples");
  return ds;
}

namespace {

std::uint64_t sample_seed(const EvalConfig& config, const BenchmarkSample& s) {
  return mix_seed(config.seed, s.id);
}

}  // namespace

Prompt method_prompt(const std::string& method_id, const BenchmarkSample& sample,
                     const Gateway& gateway, const EvalConfig& config) {
  const auto& enc = *gateway.encoder;
  std::string base = method_id;
  bool with_filter = false;
  if (base.ends_with("+filter")) {
    with_filter = true;
    base.resize(base.size() - std::string("+filter").size());
  }

  Prompt prompt;
  if (base == "one_noun" || base == "full_nouns" || base == "full_description") {
    const PromptLevel level = prompt_level_from_string(base);
    auto it = sample.reference_prompts.find(level);
    if (it == sample.reference_prompts.end())
      throw PreconditionError("sample '" + sample.id + "' has no " + base + " reference");
    prompt = enc.tokenizer().make_prompt(it->second);
  } else if (base == "caption") {
    prompt = enc.tokenizer().retokenize(
        injector::inject(sample.image, sample.pair.source, gateway, config.injector).chosen);
  } else if (base == "optimize") {
    optimizer::OptimizerConfig oc = config.optimizer;
    oc.seed = sample_seed(config, sample);
    optimizer::HardPromptOptimizer opt(enc, oc, config.exec);
    prompt = opt.optimize(sample.image, sample.pair.source).prompt;
  } else if (base.starts_with("external:")) {
    const std::string key = base.substr(std::string("external:").size());
    auto it = sample.external_prompts.find(key);
    if (it == sample.external_prompts.end())
      throw PreconditionError("sample '" + sample.id + "' has no external prompt '" + key + "'");
    prompt = enc.tokenizer().make_prompt(it->second);
  } else {
    throw ConfigError("unknown method '" + method_id + "'");
  }

  if (with_filter && prompt.words().size() >= 2) {
    const auto keep = filter::protect_words(prompt, sample.pair.source);
    prompt = filter::filter(prompt, sample.image, enc, keep, config.exec).prompt;
  }
  return prompt;
}

MetricReport evaluate_method(const std::string& method_id, const Dataset& dataset,
                             const edit::BackendRegistry& registry, const Gateway& gateway,
                             const EvalConfig& config) {
  if (dataset.samples.empty()) throw PreconditionError("dataset is empty");
  registry.get(config.backend_id);  // fail fast on an unknown backend

  MetricReport report;
  report.method_id = method_id;
  report.per_sample.resize(dataset.samples.size());
  edit::EditScheduler scheduler(config.pool_size);
  const auto& enc = *gateway.encoder;

  kernels::parallel_for(dataset.samples.size(), config.exec, [&](std::size_t i) {
    const auto& s = dataset.samples[i];
    SampleMetrics m;
    m.sample_id = s.id;
    try {
      const Prompt source = method_prompt(method_id, s, gateway, config);
      const Prompt edited = edit::build_edited_prompt(source, s.pair, enc.tokenizer());
      m.source_prompt = source.text;
      m.edited_prompt = edited.text;

      edit::EditJob job{s.image, source, edited, config.backend_id, config.sampler};
      job.sampler.seed = sample_seed(config, s);
      const edit::EditResult result = scheduler.run(job, registry, &enc);

      m.clip_score = clip_score(enc.encode_text(edited), enc.encode_image(result.output));
      const Image reference =
          resize_bilinear(s.image, config.sampler.resolution, config.sampler.resolution);
      m.lpips = gateway.metric->distance(reference, result.output);
      m.ok = true;
    } catch (const std::exception& e) {
      m.ok = false;
      m.error = e.what();
    }
    report.per_sample[i] = std::move(m);
  });

  std::vector<const SampleMetrics*> ordered;
  for (const auto& m : report.per_sample) {
    if (m.ok)
      ordered.push_back(&m);
    else
      ++report.failures;
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const SampleMetrics* a, const SampleMetrics* b) { return a->sample_id < b->sample_id; });
  if (!ordered.empty()) {
    double clip = 0.0, lp = 0.0;
    for (const auto* m : ordered) {
      clip += m->clip_score;
      lp += m->lpips;
    }
    report.clip_score_mean = clip / static_cast<double>(ordered.size());
    report.lpips_mean = lp / static_cast<double>(ordered.size());
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void write_svg(const std::vector<CurvePoint>& pts, const fs::path& path) {
  constexpr double W = 640, H = 480, L = 70, R = 30, T = 30, B = 60;
  double xmin = pts.front().lpips_mean, xmax = xmin;
  double ymin = pts.front().clip_score_mean, ymax = ymin;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.lpips_mean);
    xmax = std::max(xmax, p.lpips_mean);
    ymin = std::min(ymin, p.clip_score_mean);
    ymax = std::max(ymax, p.clip_score_mean);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double m = span > 0 ? span * 0.1 : std::max(std::abs(lo) * 0.05, 1e-3);
    lo -= m;
    hi += m;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << fmt(xv, 3) << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << fmt(yv, 2) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\">LPIPS (lower is better)</text>\n";
  out << "<text transform=\"rotate(-90)\" x=\"" << -(T + H - B) / 2
      << "\" y=\"18\" text-anchor=\"middle\">CLIP score (higher is better)</text>\n";
  for (const auto& p : pts) {
    out << "<circle cx=\"" << px(p.lpips_mean) << "\" cy=\"" << py(p.clip_score_mean)
        << "\" r=\"5\" fill=\"steelblue\"/>\n";
    out << "<text x=\"" << px(p.lpips_mean) + 8 << "\" y=\"" << py(p.clip_score_mean) - 6 << "\">"
        << svg_escape(p.method_id) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

CurveArtifact tradeoff_curve(const std::vector<MetricReport>& reports, const fs::path& out_dir) {
  if (reports.size() < 2) throw PreconditionError("a trade-off curve needs at least two reports");
  CurveArtifact art;
  for (const auto& r : reports)
    if (r.clip_score_mean && r.lpips_mean)
      art.points.push_back({r.method_id, *r.clip_score_mean, *r.lpips_mean});
  std::sort(art.points.begin(), art.points.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.method_id < b.method_id; });
  if (art.points.empty()) throw PreconditionError("no report has aggregate metrics to plot");

  fs::create_directories(out_dir);
  art.data_path = out_dir / "tradeoff.csv";
  art.plot_path = out_dir / "tradeoff.svg";
  {
    std::ofstream out(art.data_path);
    out << "method_id,clip_score_mean,lpips_mean\n";
    for (const auto& p : art.points)
      out << p.method_id << ',' << fmt(p.clip_score_mean) << ',' << fmt(p.lpips_mean) << '\n';
  }
  write_svg(art.points, art.plot_path);
  return art;
}

void write_report_csv(const MetricReport& report, std::ostream& out) {
  out << "method_id,sample_id,ok,clip_score,lpips,source_prompt,edited_prompt,error\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    return q + "\"";
  };
  for (const auto& m : report.per_sample) {
    out << report.method_id << ',' << m.sample_id << ',' << (m.ok ? 1 : 0) << ','
        << (m.ok ? fmt(m.clip_score) : "") << ',' << (m.ok ? fmt(m.lpips) : "") << ','
        << quote(m.source_prompt) << ',' << quote(m.edited_prompt) << ',' << quote(m.error) << '\n';
  }
}

void to_json(json& j, const SampleMetrics& m) {
  j = json{{"sample_id", m.sample_id}, {"ok", m.ok},
           {"source_prompt", m.source_prompt}, {"edited_prompt", m.edited_prompt}};
  if (m.ok) {
    j["clip_score"] = m.clip_score;
    j["lpips"] = m.lpips;
  } else {
    j["error"] = m.error;
  }
}

void to_json(json& j, const MetricReport& r) {
  j = json{{"method_id", r.method_id},
           {"clip_score_mean", r.clip_score_mean ? json(*r.clip_score_mean) : json(nullptr)},
           {"lpips_mean", r.lpips_mean ? json(*r.lpips_mean) : json(nullptr)},
           {"failures", r.failures},
           {"per_sample", r.per_sample}};
}

}  // namespace promptsmith::eval
