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

#include "promptsmith/mock_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "promptsmith/errors.hpp"
#include "promptsmith/random.hpp"

namespace promptsmith::mock {

namespace {

constexpr double kBigramWeight = 0.35;
constexpr double kEosBias = -0.45;
constexpr double kEosPerToken = 0.1;

struct Tables {
  Matrix embeddings;
  Matrix projection;
  Matrix bigram;
};

// Draw order is fixed: embeddings, then projection, then bigram table. A
// fixture loaded from disk replaces the embeddings but keeps the rest.
Tables draw_tables(std::uint64_t seed, std::size_t vocab, std::size_t dim) {
  Rng rng(seed);
  Tables t{Matrix(vocab, dim), Matrix(dim, dim), Matrix(vocab + 1, vocab + 1)};
  for (double& v : t.embeddings.data()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      t.projection(r, c) = (r == c ? 1.0 : 0.0) + 0.5 * rng.uniform(-1.0, 1.0);
  for (double& v : t.bigram.data()) v = rng.uniform();
  return t;
}

}  // namespace

const std::vector<std::string>& fixture_words() {
  static const std::vector<std::string> words = {
      "a",       "the",     "cat",      "dog",        "bear",    "robot",   "sweater",
      "wearing", "sitting", "on",       "dish",       "clam",    "shrimp",  "pasta",
      "blue",    "hair",    "red",      "girl",       "boy",     "man",     "woman",
      "with",    "in",      "of",       "and",        "holding", "riding",  "horse",
      "beach",   "two",     "children", "sunglasses", "corgi",   "hat",     "table",
      "plate",   "white",   "black",    "green",      "small",   "large",   "standing",
      "grass",   "tree",    "car",      "street",     "running", "eating",  "pizza",
      "bowl",    "flowers", "vase",     "wooden",     "bench",   "park",    "sky",
      "water",   "boat",    "lake",     "yellow",     "shirt",   "dress",   "field",
      "mountain"};
  return words;
}

void to_json(json& j, const MockFixture& f) {
  j = json{{"vocab", f.vocab}, {"embeddings", f.embeddings}, {"dim", f.dim}, {"seed", f.seed}};
}

void from_json(const json& j, MockFixture& f) {
  j.at("vocab").get_to(f.vocab);
  j.at("embeddings").get_to(f.embeddings);
  j.at("dim").get_to(f.dim);
  j.at("seed").get_to(f.seed);
  if (f.embeddings.rows() != f.vocab.size() || f.embeddings.cols() != f.dim)
    throw PreconditionError("fixture embeddings shape does not match vocab and dim");
}

MockFixture generate_fixture(std::uint64_t seed, std::size_t dim) {
  if (dim == 0) throw PreconditionError("fixture dim must be positive");
  const auto& words = fixture_words();
  return MockFixture{words, draw_tables(seed, words.size(), dim).embeddings, dim, seed};
}

MockFixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock fixture '" + path.string() + "'");
  return json::parse(in).get<MockFixture>();
}

void save_fixture(const MockFixture& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mock fixture '" + path.string() + "'");
  out << json(f).dump(1) << '\n';
}

// ---------------------------------------------------------------------------

MockEncoder::MockEncoder(const MockFixture& fixture)
    : vocab_("mock-clip", fixture.vocab),
      dim_(fixture.dim),
      table_(fixture.embeddings),
      projection_(draw_tables(fixture.seed, fixture.vocab.size(), fixture.dim).projection) {
  if (!table_.all_finite()) throw PreconditionError("fixture embeddings contain non-finite values");
}

Embedding MockEncoder::encode_text(const Prompt& prompt) const {
  if (prompt.vocab_id != vocab_.id())
    throw VocabularyError("prompt from vocabulary '" + prompt.vocab_id + "' given to encoder '" +
                          vocab_.id() + "'");
  if (prompt.tokens.empty()) throw PreconditionError("cannot encode an empty prompt");
  Matrix rows(prompt.tokens.size(), dim_);
  for (std::size_t i = 0; i < prompt.tokens.size(); ++i) {
    const TokenId t = prompt.tokens[i];
    if (t < 0 || static_cast<std::size_t>(t) >= table_.rows())
      throw VocabularyError("token id " + std::to_string(t) + " out of range");
    std::copy_n(table_.row(static_cast<std::size_t>(t)).begin(), dim_, rows.row(i).begin());
  }
  return encode_embeddings(rows);
}

Embedding MockEncoder::encode_embeddings(const Matrix& rows) const {
  if (rows.rows() == 0) throw PreconditionError("cannot encode an empty embedding sequence");
  if (rows.cols() != dim_) throw ContractError("embedding rows have the wrong dimension");
  std::vector<double> mean(dim_, 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < dim_; ++c) mean[c] += rows(r, c);
  for (double& v : mean) v /= static_cast<double>(rows.rows());
  Embedding out{std::vector<double>(dim_, 0.0), NormKind::kRaw};
  for (std::size_t i = 0; i < dim_; ++i) out.values[i] = dot(projection_.row(i), mean);
  return out;
}

Matrix MockEncoder::encode_embeddings_vjp(const Matrix& rows,
                                          std::span<const double> grad_out) const {
  if (grad_out.size() != dim_) throw ContractError("gradient has the wrong dimension");
  if (rows.rows() == 0) throw PreconditionError("cannot differentiate an empty sequence");
  // d(W mean)/d row_r = W / M, so every row receives W^T g / M.
  std::vector<double> back(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t c = 0; c < dim_; ++c) back[c] += projection_(i, c) * grad_out[i];
  const double inv_m = 1.0 / static_cast<double>(rows.rows());
  Matrix grad(rows.rows(), dim_);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < dim_; ++c) grad(r, c) = back[c] * inv_m;
  return grad;
}

Embedding MockEncoder::encode_image(const Image& image) const {
  if (image.empty()) throw PreconditionError("cannot encode an empty image");
  if (static_cast<std::size_t>(image.width) < dim_)
    throw PreconditionError("image narrower than the embedding dimension");
  std::vector<double> sum(dim_, 0.0), count(dim_, 0.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::size_t stripe = static_cast<std::size_t>(x) * dim_ / image.width;
      const auto* px = image.at(x, y);
      sum[stripe] += (px[0] + px[1] + px[2]) / (3.0 * 255.0);
      count[stripe] += 1.0;
    }
  }
  Embedding out{std::vector<double>(dim_), NormKind::kRaw};
  for (std::size_t j = 0; j < dim_; ++j) out.values[j] = 2.0 * sum[j] / count[j] - 1.0;
  return out;
}

Image render_image(const Embedding& target, int width, int height) {
  const std::size_t d = target.dim();
  if (d == 0) throw PreconditionError("cannot render a zero-dimensional embedding");
  if (static_cast<std::size_t>(width) < d) throw PreconditionError("image narrower than embedding");
  double scale = 0.0;
  for (double v : target.values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  Image img(width, height);
  for (int x = 0; x < width; ++x) {
    const std::size_t stripe = static_cast<std::size_t>(x) * d / width;
    const double unit = target.values[stripe] / scale;
    const auto level = static_cast<std::uint8_t>(std::lround(255.0 * (unit + 1.0) / 2.0));
    for (int y = 0; y < height; ++y) {
      auto* px = img.at(x, y);
      px[0] = px[1] = px[2] = level;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------

MockCaptioner::MockCaptioner(std::shared_ptr<const MockEncoder> encoder, std::uint64_t seed,
                             MockOptions opts)
    : encoder_(std::move(encoder)),
      vocab_("mock-caption", encoder_->vocabulary().words()),
      opts_(opts) {
  if (opts_.mode == DecodeMode::kSample && !opts_.sample_seed)
    throw ConfigError("sampling captioner requires an explicit seed");
  if (opts_.caption_tokens < 1) throw ConfigError("caption_tokens must be at least 1");
  const std::size_t v = vocab_.size();
  bigram_ = draw_tables(seed, v, encoder_->dim()).bigram;
  word_text_.reserve(v);
  for (std::size_t i = 0; i < v; ++i)
    word_text_.push_back(encoder_->encode_text(
        encoder_->tokenizer().from_tokens(std::vector<TokenId>{static_cast<TokenId>(i)})));
}

std::vector<TokenId> MockCaptioner::extend(const Image& image, std::vector<TokenId> tokens,
                                           int budget, std::uint64_t stream) const {
  const std::size_t v = vocab_.size();
  const Embedding img = encoder_->encode_image(image);
  const bool img_zero = img.norm() == 0.0;
  std::vector<double> relevance(v, 0.0);
  if (!img_zero)
    for (std::size_t w = 0; w < v; ++w)
      if (word_text_[w].norm() > 0.0) relevance[w] = cosine_similarity(word_text_[w], img);

  std::vector<bool> used(v, false);
  for (TokenId t : tokens) used[static_cast<std::size_t>(t)] = true;
  Rng rng(stream);

  for (int step = 0; step < budget; ++step) {
    const std::size_t prev = tokens.empty() ? v : static_cast<std::size_t>(tokens.back());
    // Candidate v (one past the vocabulary) is end-of-caption.
    std::vector<double> score(v + 1, -INFINITY);
    for (std::size_t w = 0; w < v; ++w)
      if (!used[w]) score[w] = kBigramWeight * bigram_(prev, w) + relevance[w];
    if (!tokens.empty())
      score[v] = kBigramWeight * bigram_(prev, v) + kEosBias +
                 kEosPerToken * static_cast<double>(tokens.size());

    std::size_t pick = v;
    if (opts_.mode == DecodeMode::kGreedy) {
      double best = -INFINITY;
      for (std::size_t w = 0; w <= v; ++w)
        if (score[w] > best) {
          best = score[w];
          pick = w;
        }
    } else {
      const double top = *std::max_element(score.begin(), score.end());
      std::vector<double> cdf(v + 1);
      double acc = 0.0;
      for (std::size_t w = 0; w <= v; ++w) {
        acc += std::isfinite(score[w]) ? std::exp((score[w] - top) / opts_.temperature) : 0.0;
        cdf[w] = acc;
      }
      const double u = rng.uniform() * acc;
      pick = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      pick = std::min(pick, v);
    }
    if (pick == v || !std::isfinite(score[pick])) break;
    tokens.push_back(static_cast<TokenId>(pick));
    used[pick] = true;
  }
  return tokens;
}

Prompt MockCaptioner::generate(const Image& image) const {
  const std::uint64_t stream = opts_.sample_seed.value_or(0);
  auto tokens = extend(image, {}, opts_.caption_tokens, stream);
  if (tokens.empty()) throw GatewayError("mock captioner produced an empty caption");
  return vocab_.from_tokens(tokens);
}

Prompt MockCaptioner::continue_caption(const Image& image, const Prompt& prefix,
                                       int max_new_tokens) const {
  if (prefix.vocab_id != vocab_.id())
    throw VocabularyError("prefix from vocabulary '" + prefix.vocab_id + "' given to captioner '" +
                          vocab_.id() + "'");
  if (prefix.tokens.empty()) throw PreconditionError("continuation prefix is empty");
  std::uint64_t stream = opts_.sample_seed.value_or(0);
  for (TokenId t : prefix.tokens) stream = stream * 1000003ULL + static_cast<std::uint64_t>(t);
  auto tokens = extend(image, prefix.tokens, std::max(0, max_new_tokens), stream);
  return vocab_.from_tokens(tokens);
}

// ---------------------------------------------------------------------------

double MockPerceptualMetric::distance(const Image& a, const Image& b) const {
  const auto da = box_downsample(a, 16, 16);
  const auto db = box_downsample(b, 16, 16);
  double s = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    s += d * d;
  }
  return s / static_cast<double>(da.size());
}

Gateway mock_gateway(const MockFixture& fixture, MockOptions opts) {
  auto encoder = std::make_shared<const MockEncoder>(fixture);
  auto captioner = std::make_shared<const MockCaptioner>(encoder, fixture.seed, opts);
  json meta{{"backend", "mock"},
            {"fixture_seed", fixture.seed},
            {"dim", fixture.dim},
            {"vocab_size", fixture.vocab.size()},
            {"caption_tokens", opts.caption_tokens},
            {"clip_score", "100*cosine, unclamped"}};
  return Gateway{"mock", encoder, captioner, std::make_shared<const MockPerceptualMetric>(),
                 std::move(meta)};
}

Gateway mock_gateway(std::uint64_t seed, MockOptions opts) {
  return mock_gateway(generate_fixture(seed), opts);
}

}  // namespace promptsmith::mock
